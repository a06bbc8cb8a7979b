import numpy as np
import pytest

from conftest import fake_embeddings, motif_dataset
from pdeeppp import data as d
from pdeeppp.errors import (AlignmentError, ContractError, DataError,
                            ParseError)


@pytest.fixture
def csv_path(tmp_path):
    p = tmp_path / "set.csv"
    p.write_text("id,sequence,label\na,ACDK,1\nb,LMNP,0\nc,QRST,1\n")
    return p


class TestCsv:
    def test_parse(self, csv_path):
        recs = d.parse_csv(csv_path)
        assert [(r.id, r.sequence, r.label) for r in recs] == [
            ("a", "ACDK", 1), ("b", "LMNP", 0), ("c", "QRST", 1)]
        assert all(r.task_kind == "bp" and r.site is None for r in recs)

    def test_site_column(self, tmp_path):
        p = tmp_path / "ptm.csv"
        p.write_text("id,sequence,label,site\np1,ACDKLMNP,1,3\n")
        (rec,) = d.parse_csv(p)
        assert rec.site == 3 and rec.task_kind == "ptm"

    def test_bad_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("name,seq\n")
        with pytest.raises(ParseError, match="bad.csv:1"):
            d.parse_csv(p)

    def test_bad_label_names_line(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("id,sequence,label\na,ACDK,2\n")
        with pytest.raises(ParseError, match="bad.csv:2"):
            d.parse_csv(p)

    def test_duplicate_id(self, tmp_path):
        p = tmp_path / "dup.csv"
        p.write_text("id,sequence,label\na,ACDK,1\na,LMNP,0\n")
        with pytest.raises(DataError, match="'a'"):
            d.parse_csv(p)

    def test_roundtrip(self, tmp_path, csv_path):
        recs = d.parse_csv(csv_path)
        out = tmp_path / "copy.csv"
        d.write_csv(out, recs)
        again = d.parse_csv(out)
        assert [(r.id, r.sequence, r.label, r.site) for r in recs] == \
               [(r.id, r.sequence, r.label, r.site) for r in again]


class TestFasta:
    def test_parse_multiline(self, tmp_path):
        p = tmp_path / "set.fasta"
        p.write_text(">a|1\nACD\nKLM\n>b|0|site=2\nNPQRS\n")
        recs = d.parse_fasta(p)
        assert (recs[0].id, recs[0].sequence, recs[0].label) == ("a", "ACDKLM", 1)
        assert recs[1].site == 2 and recs[1].task_kind == "ptm"

    def test_sequence_before_header(self, tmp_path):
        p = tmp_path / "bad.fasta"
        p.write_text("ACDK\n>a|1\nLMNP\n")
        with pytest.raises(ParseError, match="bad.fasta:1"):
            d.parse_fasta(p)

    def test_missing_label(self, tmp_path):
        p = tmp_path / "bad.fasta"
        p.write_text(">justanid\nACDK\n")
        with pytest.raises(ParseError):
            d.parse_fasta(p)

    def test_roundtrip(self, tmp_path):
        recs = [d.SampleRecord(id="a", sequence="ACDK", label=1),
                d.SampleRecord(id="b", sequence="LMNP", label=0,
                               task_kind="ptm", site=2)]
        p = tmp_path / "out.fasta"
        d.write_fasta(p, recs)
        again = d.parse_fasta(p)
        assert [(r.id, r.sequence, r.label, r.site) for r in recs] == \
               [(r.id, r.sequence, r.label, r.site) for r in again]


class TestWindows:
    SPEC = d.WindowSpec(flank=16)

    def test_window_length_and_center(self):
        seq = "A" * 100
        w = d.extract_window(seq, 50, self.SPEC)
        assert len(w) == 33
        assert w == "A" * 33

    def test_pad_near_start(self):
        seq = "ACDEFGHIKLMNPQRSTVWY"
        w = d.extract_window(seq, 2, self.SPEC)
        assert w == "-" * 14 + seq[:19]
        assert w[self.SPEC.center] == seq[2]

    def test_pad_near_end(self):
        seq = "ACDEFGHIKLMNPQRSTVWY"
        w = d.extract_window(seq, 18, self.SPEC)
        assert w.endswith("-" * 15)
        assert w[self.SPEC.center] == seq[18]

    def test_site_out_of_range(self):
        with pytest.raises(ContractError):
            d.extract_window("ACDK", 4, self.SPEC)

    def test_windowize_ids(self):
        recs = [d.SampleRecord(id="p1", sequence="A" * 40, label=1,
                               task_kind="ptm", site=20)]
        (w,) = d.windowize(recs, self.SPEC)
        assert w.id == "p1@20" and len(w.sequence) == 33

    def test_windowize_requires_site(self):
        recs = [d.SampleRecord(id="p1", sequence="ACDK", label=1)]
        with pytest.raises(DataError, match="'p1'"):
            d.windowize(recs, self.SPEC)

    def test_slice_matches_window_coordinates(self, rng):
        full = rng.normal(size=(40, 8)).astype(np.float32)
        sliced = d.slice_window_embedding(full, 5, 16)
        assert sliced.shape == (33, 8)
        np.testing.assert_array_equal(sliced[:11], 0.0)  # before the protein
        np.testing.assert_array_equal(sliced[11:], full[:22])

    def test_resolve_from_full_protein(self, rng):
        full = {"p1": rng.normal(size=(40, 8)).astype(np.float32)}
        rec = d.SampleRecord(id="p1@20", sequence="A" * 33, label=1)
        out = d.resolve_embeddings([rec], full, flank=16)
        np.testing.assert_array_equal(out["p1@20"], full["p1"][4:37])

    def test_resolve_prefers_direct_id(self, rng):
        direct = rng.normal(size=(33, 8)).astype(np.float32)
        table = {"p1@20": direct, "p1": rng.normal(size=(40, 8)).astype(np.float32)}
        rec = d.SampleRecord(id="p1@20", sequence="A" * 33, label=1)
        out = d.resolve_embeddings([rec], table, flank=16)
        np.testing.assert_array_equal(out["p1@20"], direct)

    def test_resolve_missing_names_id(self):
        rec = d.SampleRecord(id="ghost", sequence="ACDK", label=0)
        with pytest.raises(AlignmentError, match="'ghost'"):
            d.resolve_embeddings([rec], {}, flank=16)


class TestSplit:
    def test_sizes_and_stratification(self):
        recs = motif_dataset(100, seed=1, pos_frac=0.3)
        splits = d.split(recs, d.SplitPlan(seed=5))
        assert len(splits["test"]) == 20
        assert len(splits["val"]) == 8
        assert len(splits["train"]) == 72
        test_pos = sum(r.label for r in splits["test"])
        assert test_pos == 6  # 20% of the 30 positives

    def test_partition_is_exact(self):
        recs = motif_dataset(57, seed=2)
        splits = d.split(recs, d.SplitPlan(seed=3))
        ids = [r.id for part in splits.values() for r in part]
        assert sorted(ids) == sorted(r.id for r in recs)

    def test_deterministic(self):
        recs = motif_dataset(40, seed=4)
        a = d.split(recs, d.SplitPlan(seed=9))
        b = d.split(recs, d.SplitPlan(seed=9))
        assert all([r.id for r in a[k]] == [r.id for r in b[k]] for k in a)

    def test_seed_changes_assignment(self):
        recs = motif_dataset(40, seed=4)
        a = d.split(recs, d.SplitPlan(seed=1))
        b = d.split(recs, d.SplitPlan(seed=2))
        assert [r.id for r in a["test"]] != [r.id for r in b["test"]]

    def test_too_few_records(self):
        with pytest.raises(ContractError):
            d.split(motif_dataset(9, seed=0), d.SplitPlan())


class TestEmbeddingFile:
    def test_roundtrip_bit_exact(self, tmp_path, rng):
        mats = {"a": rng.normal(size=(5, 1280)).astype(np.float32),
                "b": rng.normal(size=(9, 1280)).astype(np.float32)}
        path = tmp_path / "emb.bin"
        d.write_embeddings(path, mats)
        back = d.read_embeddings(path)
        assert list(back) == ["a", "b"]
        for k in mats:
            assert back[k].dtype == np.float32
            assert np.array_equal(back[k], mats[k])

    def test_rewrite_is_byte_identical(self, tmp_path, rng):
        mats = {"a": rng.normal(size=(5, 1280)).astype(np.float32)}
        p1, p2 = tmp_path / "e1.bin", tmp_path / "e2.bin"
        d.write_embeddings(p1, mats)
        d.write_embeddings(p2, mats)
        assert p1.read_bytes() == p2.read_bytes()

    def test_corruption_detected(self, tmp_path, rng):
        path = tmp_path / "emb.bin"
        d.write_embeddings(path, {"a": rng.normal(size=(3, 1280)).astype(np.float32)})
        blob = bytearray(path.read_bytes())
        blob[30] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(DataError, match="checksum"):
            d.read_embeddings(path)

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOTEMBED" + b"\x00" * 20)
        with pytest.raises(ParseError):
            d.read_embeddings(path)

    def test_wrong_dimension_rejected_on_write(self, tmp_path, rng):
        with pytest.raises(DataError, match="'a'"):
            d.write_embeddings(tmp_path / "e.bin",
                               {"a": rng.normal(size=(3, 64)).astype(np.float32)})


class TestPadBatch:
    def test_padding_layout(self):
        recs = [d.SampleRecord(id="s", sequence="ACK", label=1),
                d.SampleRecord(id="t", sequence="ACDEF", label=0)]
        embs = fake_embeddings(recs)
        batch = d.pad_batch(recs, embs)
        assert batch.tokens.shape == (2, 5)
        assert batch.tokens[0, 3] == batch.tokens[0, 4] == 21
        assert list(batch.lengths) == [3, 5]
        assert batch.mask[0].tolist() == [True, True, True, False, False]
        np.testing.assert_array_equal(batch.features[0, 3:], 0.0)
        assert batch.ids == ["s", "t"]

    def test_window_pad_characters_masked(self):
        recs = [d.SampleRecord(id="w", sequence="--ACK", label=1)]
        embs = fake_embeddings(recs)
        batch = d.pad_batch(recs, embs)
        assert batch.mask[0].tolist() == [False, False, True, True, True]
        np.testing.assert_array_equal(batch.features[0, :2], 0.0)
        assert batch.lengths[0] == 5  # prefix length includes window pads

    def test_missing_embedding_names_id(self):
        recs = [d.SampleRecord(id="lost", sequence="ACK", label=1)]
        with pytest.raises(AlignmentError, match="'lost'"):
            d.pad_batch(recs, {})

    def test_length_mismatch_names_id(self, rng):
        recs = [d.SampleRecord(id="m", sequence="ACK", label=1)]
        embs = {"m": rng.normal(size=(7, 1280)).astype(np.float32)}
        with pytest.raises(AlignmentError, match="'m'"):
            d.pad_batch(recs, embs)

    def test_empty_batch_rejected(self):
        with pytest.raises(ContractError):
            d.pad_batch([], {})
