"""Law-enforcement request management: workflow, evidence custody, remote
collection, transparency reporting, and cost invoicing."""

__version__ = "0.1.0"
