"""Command-line entry point: one ``export`` command."""

import sys

import click

from .export import ExportJob, ModelUnavailableError
from .export import export as run_export
from .export import fake_export
from .fasta import FastaError


@click.command()
@click.option("--fasta", "fasta_path", required=True,
              type=click.Path(exists=True), help="input fasta file")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="output PDPPEMB1 embedding file")
@click.option("--batch", "batch_size", default=8, show_default=True,
              help="sequences per model forward pass")
@click.option("--fake", is_flag=True,
              help="write deterministic pseudo-random embeddings (no model)")
@click.option("--seed", default=0, show_default=True,
              help="seed for --fake embeddings")
@click.option("--device", default="cpu", show_default=True,
              help="torch device for real export")
def export(fasta_path, out_path, batch_size, fake, seed, device):
    """Run the pretrained 650M protein language model over FASTA_PATH and
    write per-residue 1280-dimensional embeddings to OUT_PATH."""
    try:
        if fake:
            ids = fake_export(fasta_path, out_path, seed=seed)
        else:
            ids = run_export(ExportJob(fasta_path=fasta_path, out_path=out_path,
                                       batch_size=batch_size, device=device))
    except FastaError as exc:
        click.echo(f"input error: {exc}", err=True)
        sys.exit(3)
    except ModelUnavailableError as exc:
        click.echo(f"model error: {exc}", err=True)
        sys.exit(4)
    click.echo(f"wrote {len(ids)} records to {out_path}")


if __name__ == "__main__":
    export()
