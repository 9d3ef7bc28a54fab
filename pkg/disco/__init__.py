"""pydisco: a desk-scale laboratory for private split inference."""

__version__ = '0.1.0'
