"""Per-residue protein embedding export to the PDPPEMB1 container."""

from .export import ExportJob, export, fake_export
from .writer import write_embeddings

__version__ = "0.1.0"

__all__ = ["ExportJob", "export", "fake_export", "write_embeddings",
           "__version__"]
