"""Isogeometric penalty contact in 2D plane strain with Galerkin, collocated
and collocated-contact-surface formulations."""

__version__ = "0.1.0"
