"""
reflexcr - numerical Schwarz reflection and CR extension toolkit
"""

__version__ = "0.1.0"
