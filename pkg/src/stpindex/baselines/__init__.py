"""Reference backends the multiversion index is measured against."""

from .btree import BTree
from .listsol import ListBackend, ordered_visit
from .primitive import CapacityExceeded, PrimitiveBackend, StructureA, StructureB

__all__ = [
    "BTree", "CapacityExceeded", "ListBackend", "PrimitiveBackend",
    "StructureA", "StructureB", "ordered_visit",
]
