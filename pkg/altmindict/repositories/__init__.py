"""
Repository layer for file access.

Repositories handle all reading and writing of matrices, manifests and reports.
"""

from altmindict.repositories.matrix_repository import MatrixRepository
from altmindict.repositories.report_repository import ReportRepository

__all__ = [
    'MatrixRepository',
    'ReportRepository'
]
