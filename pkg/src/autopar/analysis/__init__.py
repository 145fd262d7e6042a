"""Access-signature inference over resolved programs."""

from autopar.analysis.datagroups import Datagroup, Permission, Signature
from autopar.analysis.externals import default_externals, load_externals, parse_externals
from autopar.analysis.signatures import SignatureTable, extract_signatures

__all__ = [
    "Datagroup", "Permission", "Signature", "SignatureTable", "default_externals",
    "extract_signatures", "load_externals", "parse_externals",
]
