"""Unsplittable multicommodity flow on outerplanar graphs."""

__version__ = "0.1.0"
