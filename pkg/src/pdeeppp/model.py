"""The parallel feature extractor and classifier head.

Two branches consume the fused per-residue embeddings: a pre-attention
plus stacked-encoder transformer (global features, masked mean-pooled)
and a positional-encoding/conv/adaptive-pool branch (local features).
Their outputs are concatenated and pushed through a small convolutional
head that emits two logits.
"""

import numpy as np

from . import embedding as emb
from .config import EMBED_DIM
from .errors import ContractError
from .tensor import (Tensor, adaptive_avg_pool, add, concat, conv1d_same,
                     layer_norm, matmul, mul_const, relu, reshape, softmax,
                     transpose, tsum)

NEG_ATTN = -1e9  # additive mask applied to padded key positions


def positional_encoding(length, dim, dtype=np.float32):
    """Fixed sinusoidal table: sin on even feature indices, cos on odd."""
    pos = np.arange(length)[:, None].astype(np.float64)
    i = np.arange(0, dim, 2).astype(np.float64)
    angle = pos / np.power(10000.0, i / dim)
    table = np.zeros((length, dim))
    table[:, 0::2] = np.sin(angle)
    table[:, 1::2] = np.cos(angle)
    return table.astype(dtype)


def _init(rng, shape, fan_in, dtype):
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True,
                  dtype=dtype)


def _zeros(shape, dtype):
    return Tensor(np.zeros(shape), requires_grad=True, dtype=dtype)


def _linear(x, w, b):
    return add(matmul(x, w), b)


class Attention:
    """Multi-head scaled dot-product self-attention with output projection."""

    def __init__(self, rng, d_model, n_heads, dtype):
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.wq = _init(rng, (d_model, d_model), d_model, dtype)
        self.wk = _init(rng, (d_model, d_model), d_model, dtype)
        self.wv = _init(rng, (d_model, d_model), d_model, dtype)
        self.wo = _init(rng, (d_model, d_model), d_model, dtype)
        self.bq = _zeros(d_model, dtype)
        self.bk = _zeros(d_model, dtype)
        self.bv = _zeros(d_model, dtype)
        self.bo = _zeros(d_model, dtype)

    def named(self, prefix):
        return {f"{prefix}.{n}": getattr(self, n)
                for n in ("wq", "wk", "wv", "wo", "bq", "bk", "bv", "bo")}

    def __call__(self, x, mask):
        b, length, d_model = x.shape
        if not mask.any(axis=1).all():
            raise ContractError("attention mask leaves a sample with no attendable position")
        h, dh = self.n_heads, self.d_head

        def split(t):  # (B, L, D) -> (B, H, L, Dh)
            return transpose(reshape(t, (b, length, h, dh)), (0, 2, 1, 3))

        q = split(_linear(x, self.wq, self.bq))
        k = split(_linear(x, self.wk, self.bk))
        v = split(_linear(x, self.wv, self.bv))
        scores = matmul(q, transpose(k, (0, 1, 3, 2))) * (1.0 / np.sqrt(dh))
        bias = np.where(mask[:, None, None, :], 0.0, NEG_ATTN).astype(x.dtype)
        weights = softmax(add(scores, Tensor(bias, dtype=x.dtype)), axis=-1)
        ctx = matmul(weights, v)  # (B, H, L, Dh)
        merged = reshape(transpose(ctx, (0, 2, 1, 3)), (b, length, d_model))
        return _linear(merged, self.wo, self.bo)


class _LayerNormParams:
    def __init__(self, dim, dtype):
        self.gain = Tensor(np.ones(dim), requires_grad=True, dtype=dtype)
        self.shift = _zeros(dim, dtype)

    def named(self, prefix):
        return {f"{prefix}.gain": self.gain, f"{prefix}.shift": self.shift}

    def __call__(self, x):
        return layer_norm(x, self.gain, self.shift)


class EncoderLayer:
    """Attention + residual + norm, then position-wise FFN + residual + norm."""

    def __init__(self, rng, d_model, n_heads, d_ff, dtype):
        self.attn = Attention(rng, d_model, n_heads, dtype)
        self.norm1 = _LayerNormParams(d_model, dtype)
        self.w1 = _init(rng, (d_model, d_ff), d_model, dtype)
        self.b1 = _zeros(d_ff, dtype)
        self.w2 = _init(rng, (d_ff, d_model), d_ff, dtype)
        self.b2 = _zeros(d_model, dtype)
        self.norm2 = _LayerNormParams(d_model, dtype)

    def named(self, prefix):
        out = self.attn.named(f"{prefix}.attn")
        out.update(self.norm1.named(f"{prefix}.norm1"))
        out.update({f"{prefix}.ff.w1": self.w1, f"{prefix}.ff.b1": self.b1,
                    f"{prefix}.ff.w2": self.w2, f"{prefix}.ff.b2": self.b2})
        out.update(self.norm2.named(f"{prefix}.norm2"))
        return out

    def __call__(self, x, mask):
        x = self.norm1(add(x, self.attn(x, mask)))
        ff = _linear(relu(_linear(x, self.w1, self.b1)), self.w2, self.b2)
        return self.norm2(add(x, ff))


class TransLinear:
    """Global branch: optional pre-attention block, then stacked encoders."""

    def __init__(self, rng, cfg, use_pre_attention, dtype):
        self.use_pre = use_pre_attention and cfg.use_pre_attention
        d = cfg.d_model
        if self.use_pre:
            self.pre_attn = Attention(rng, d, cfg.n_heads, dtype)
            self.pre_norm = _LayerNormParams(d, dtype)
        self.layers = [EncoderLayer(rng, d, cfg.n_heads, cfg.ff_width, dtype)
                       for _ in range(cfg.n_layers)]

    def named(self, prefix="translinear"):
        out = {}
        if self.use_pre:
            out.update(self.pre_attn.named(f"{prefix}.pre.attn"))
            out.update(self.pre_norm.named(f"{prefix}.pre.norm"))
        for i, layer in enumerate(self.layers):
            out.update(layer.named(f"{prefix}.layers.{i}"))
        return out

    def __call__(self, x, mask):
        if self.use_pre:
            x = self.pre_norm(add(x, self.pre_attn(x, mask)))
        for layer in self.layers:
            x = layer(x, mask)
        return x


class PosCNN:
    """Local branch: positional encoding, kernel-3 conv, masked adaptive pool."""

    def __init__(self, rng, cfg, d_model, channels, dtype):
        self.cfg = cfg
        self.channels = channels
        self.conv_w = _init(rng, (channels, d_model, cfg.kernel), d_model * cfg.kernel, dtype)
        self.conv_b = _zeros(channels, dtype)
        width = channels * cfg.pool_len
        self.fc_w = _init(rng, (width, width), width, dtype)
        self.fc_b = _zeros(width, dtype)

    def named(self, prefix="poscnn"):
        return {f"{prefix}.conv.w": self.conv_w, f"{prefix}.conv.b": self.conv_b,
                f"{prefix}.fc.w": self.fc_w, f"{prefix}.fc.b": self.fc_b}

    def __call__(self, x, lengths, mask):
        b, length, _ = x.shape
        if self.cfg.use_positional_encoding:
            pe = positional_encoding(length, x.shape[-1], dtype=x.dtype)
            x = add(x, Tensor(pe[None], dtype=x.dtype))
        # re-zero pads so appended padding cannot leak through the conv
        x = mul_const(x, mask[:, :, None].astype(x.dtype))
        feat = conv1d_same(transpose(x, (0, 2, 1)), self.conv_w, self.conv_b)
        pooled = adaptive_avg_pool(relu(feat), self.cfg.pool_len,
                                   lengths=lengths, mask=mask)
        flat = reshape(pooled, (b, self.channels * self.cfg.pool_len))
        return _linear(flat, self.fc_w, self.fc_b)


class ClassifierHead:
    """Concatenated features -> 1-channel conv -> pool -> linear logits."""

    def __init__(self, rng, cfg, in_dim, dtype):
        if cfg.pooled_len > in_dim:
            raise ContractError(
                f"head pooled_len {cfg.pooled_len} exceeds feature length {in_dim}")
        self.cfg = cfg
        self.conv_w = _init(rng, (cfg.conv_channels, 1, cfg.conv_kernel),
                            cfg.conv_kernel, dtype)
        self.conv_b = _zeros(cfg.conv_channels, dtype)
        width = cfg.conv_channels * cfg.pooled_len
        self.fc_w = _init(rng, (width, cfg.n_classes), width, dtype)
        self.fc_b = _zeros(cfg.n_classes, dtype)

    def named(self, prefix="head"):
        return {f"{prefix}.conv.w": self.conv_w, f"{prefix}.conv.b": self.conv_b,
                f"{prefix}.fc.w": self.fc_w, f"{prefix}.fc.b": self.fc_b}

    def __call__(self, features):
        b, width = features.shape
        seq = reshape(features, (b, 1, width))
        conv = relu(conv1d_same(seq, self.conv_w, self.conv_b))
        pooled = adaptive_avg_pool(conv, self.cfg.pooled_len)
        flat = reshape(pooled, (b, self.cfg.conv_channels * self.cfg.pooled_len))
        return _linear(flat, self.fc_w, self.fc_b)


class Model:
    """Full network built from a RunConfig; parameters live in a name->Tensor map."""

    def __init__(self, cfg, rng=None, dtype=np.float32):
        if rng is None:
            rng = np.random.default_rng(cfg.seed)
        self.cfg = cfg
        self.dtype = dtype
        d = cfg.model.d_model
        self.base = None
        if cfg.effective_alpha < 1.0:
            self.base = emb.BaseEmbeddingParams(rng, dtype=dtype)
        if d == EMBED_DIM:
            proj = np.eye(EMBED_DIM)
            self.proj_w = Tensor(proj, requires_grad=True, dtype=dtype)
        else:
            self.proj_w = _init(rng, (EMBED_DIM, d), EMBED_DIM, dtype)
        self.proj_b = _zeros(d, dtype)
        self.translinear = None
        if not cfg.no_translinear:
            self.translinear = TransLinear(
                rng, cfg.model, not cfg.no_pre_attention, dtype)
        self.poscnn = None
        channels = cfg.poscnn_channels
        self.local_dim = channels * cfg.poscnn.pool_len
        if not cfg.no_poscnn:
            pos_cfg = cfg.poscnn
            if cfg.no_pos_encoding:
                import dataclasses
                pos_cfg = dataclasses.replace(pos_cfg, use_positional_encoding=False)
            self.poscnn = PosCNN(rng, pos_cfg, d, channels, dtype)
        self.head = ClassifierHead(rng, cfg.head, d + self.local_dim, dtype)

    def parameters(self):
        out = {"input_proj.w": self.proj_w, "input_proj.b": self.proj_b}
        if self.base is not None:
            out.update(self.base.named())
        if self.translinear is not None:
            out.update(self.translinear.named())
        if self.poscnn is not None:
            out.update(self.poscnn.named())
        out.update(self.head.named())
        return out

    def parameter_count(self):
        return sum(t.data.size for t in self.parameters().values())

    def embed(self, tokens, features):
        """Fuse pretrained features with the learned base embedding."""
        fused = emb.fuse(
            features,
            emb.base_embed(tokens, self.base) if self.base is not None
            else features,  # unused at alpha == 1
            emb.FusionConfig(self.cfg.effective_alpha))
        return fused

    def forward(self, tokens, features, lengths, mask):
        """Batch forward pass to logits.

        ``tokens``: (B, L) int array; ``features``: Tensor (B, L, 1280);
        ``lengths``: (B,) valid prefix lengths; ``mask``: (B, L) bool.
        """
        b = tokens.shape[0]
        fused = self.embed(tokens, features)
        x = _linear(fused, self.proj_w, self.proj_b)
        x = mul_const(x, mask[:, :, None].astype(self.dtype))
        if self.translinear is not None:
            enc = self.translinear(x, mask)
            valid = mask[:, :, None].astype(self.dtype)
            counts = mask.sum(axis=1).astype(self.dtype)
            pooled = tsum(mul_const(enc, valid), axis=1)
            global_feat = mul_const(pooled, (1.0 / counts)[:, None])
        else:
            global_feat = Tensor(np.zeros((b, self.cfg.model.d_model)), dtype=self.dtype)
        if self.poscnn is not None:
            local_feat = self.poscnn(x, lengths, mask)
        else:
            local_feat = Tensor(np.zeros((b, self.local_dim)), dtype=self.dtype)
        return self.head(concat([global_feat, local_feat], axis=-1))

    def scores(self, tokens, features, lengths, mask):
        """Positive-class probabilities, detached."""
        logits = self.forward(tokens, features, lengths, mask)
        probs = softmax(logits, axis=-1)
        return probs.data[:, 1].astype(np.float64)
