"""Vertex-reinforced jump processes on b-ary trees."""

__version__ = "0.1.0"
