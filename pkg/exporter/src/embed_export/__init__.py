"""Run a pretrained encoder over marker-inserted documents and emit interchange files.

The exporter reads the engine's corpus JSON format, wraps every event
mention in ``<t>`` ... ``</t>`` marker tokens, encodes the document either
in overlapping windows (BERT-style encoders) or as one long window
(Longformer-style encoders), and writes the binary embedding interchange
format. It communicates with the engine only through those two file
formats.
"""

from .exporter import ExportJob, MARK_END, MARK_START, export_corpus, export_document, insert_markers

__version__ = "0.1.0"

__all__ = [
    "ExportJob",
    "MARK_END",
    "MARK_START",
    "export_corpus",
    "export_document",
    "insert_markers",
]
