"""
Repository for matrix files and instance directories.

Matrix text format: line 1 is "rows cols", then one whitespace-separated
line per row with 17 significant digits (exact float64 round trip).
An instance directory holds Astar.txt, Xstar.txt, Y.txt and manifest.txt.
"""

from pathlib import Path
from typing import Dict, Tuple, Union
import logging

import numpy as np
from dotenv import dotenv_values

from altmindict.exceptions import AltMinError, MatrixFormatError
from altmindict.services.model_core import CoefficientMatrix, Dictionary, ModelConfig, SampleSet
from altmindict.utils.formatting import format_report, parse_number

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MATRIX_FORMAT = '%.17g'
DICTIONARY_FILE = 'Astar.txt'
COEFFICIENT_FILE = 'Xstar.txt'
SAMPLES_FILE = 'Y.txt'
MANIFEST_FILE = 'manifest.txt'

_INT_FIELDS = ('d', 'r', 'n', 's', 'seed')
_FLOAT_FIELDS = ('M', 'mu1', 'custom_low')


class MatrixRepository:
    """File access for matrices, manifests and generated instances"""

    @staticmethod
    def save_matrix(path: PathLike, matrix) -> Path:
        """Write a 2-D matrix in the text format; parent directories are created."""
        entries = matrix.entries if isinstance(matrix, (Dictionary, CoefficientMatrix)) else matrix
        entries = np.asarray(entries, dtype=np.float64)
        if entries.ndim != 2:
            raise MatrixFormatError(path, f"expected a 2-D matrix, got {entries.ndim} dimensions")
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        rows, cols = entries.shape
        with open(path, 'w') as handle:
            handle.write(f"{rows} {cols}\n")
            np.savetxt(handle, entries, fmt=MATRIX_FORMAT)
        logger.debug(f"Wrote {rows}x{cols} matrix to {path}")
        return path

    @staticmethod
    def load_matrix(path: PathLike) -> np.ndarray:
        """
        Read a matrix file.

        Raises:
            MatrixFormatError: on a bad header, wrong entry count or non-finite values
            OSError: if the file cannot be read
        """
        path = Path(path)
        with open(path) as handle:
            header = handle.readline().split()
            if len(header) != 2:
                raise MatrixFormatError(path, "header must be 'rows cols'")
            try:
                rows, cols = int(header[0]), int(header[1])
            except ValueError as e:
                raise MatrixFormatError(path, f"non-integer header {header}") from e
            if rows < 1 or cols < 1:
                raise MatrixFormatError(path, f"invalid shape {rows}x{cols}")
            try:
                entries = np.loadtxt(handle, dtype=np.float64, ndmin=2)
            except ValueError as e:
                raise MatrixFormatError(path, str(e)) from e

        if entries.shape != (rows, cols):
            raise MatrixFormatError(path, f"header says {rows}x{cols}, body has shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise MatrixFormatError(path, "non-finite entry")
        return entries

    @staticmethod
    def save_manifest(path: PathLike, values: Dict[str, object]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(format_report(values))
        return path

    @staticmethod
    def load_manifest(path: PathLike) -> Dict[str, str]:
        """Read a key=value manifest (dotenv syntax)."""
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"manifest not found: {path}")
        return {key: value for key, value in dotenv_values(path).items() if value is not None}

    @staticmethod
    def model_from_manifest(values: Dict[str, str], path: PathLike = MANIFEST_FILE) -> ModelConfig:
        """Rebuild the ModelConfig recorded in a manifest."""
        kwargs = {}
        for key in _INT_FIELDS:
            if key not in values:
                raise MatrixFormatError(path, f"manifest is missing '{key}'")
            # int() keeps 64-bit seeds exact
            try:
                kwargs[key] = int(values[key].strip())
            except ValueError as e:
                raise MatrixFormatError(path, f"'{key}' is not an integer: {values[key]}") from e
        for key in _FLOAT_FIELDS:
            if key in values:
                number = parse_number(values[key])
                if number is None:
                    raise MatrixFormatError(path, f"'{key}' is not a number: {values[key]}")
                kwargs[key] = number
        if 'nonzero_law' in values:
            kwargs['nonzero_law'] = values['nonzero_law']
        try:
            return ModelConfig(**kwargs)
        except AltMinError as e:
            raise MatrixFormatError(path, str(e)) from e

    @classmethod
    def save_instance(cls, directory: PathLike, Astar: Dictionary, Xstar: CoefficientMatrix,
                      Y: SampleSet, manifest: Dict[str, object]) -> Path:
        """Write the four instance files; identical inputs give byte-identical files."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        cls.save_matrix(directory / DICTIONARY_FILE, Astar)
        cls.save_matrix(directory / COEFFICIENT_FILE, Xstar)
        cls.save_matrix(directory / SAMPLES_FILE, Y.Y)
        cls.save_manifest(directory / MANIFEST_FILE, manifest)
        logger.info(f"Saved instance to {directory}")
        return directory

    @classmethod
    def load_instance(cls, directory: PathLike) -> Tuple[Dictionary, CoefficientMatrix, SampleSet]:
        """
        Load (A*, X*, Y) and the model config from an instance directory.

        Raises:
            MatrixFormatError: if a file is malformed or the shapes disagree
        """
        directory = Path(directory)
        manifest_path = directory / MANIFEST_FILE
        model = cls.model_from_manifest(cls.load_manifest(manifest_path), manifest_path)

        A = cls.load_matrix(directory / DICTIONARY_FILE)
        X = cls.load_matrix(directory / COEFFICIENT_FILE)
        Y = cls.load_matrix(directory / SAMPLES_FILE)
        expected = {
            DICTIONARY_FILE: ((model.d, model.r), A.shape),
            COEFFICIENT_FILE: ((model.r, model.n), X.shape),
            SAMPLES_FILE: ((model.d, model.n), Y.shape),
        }
        for name, (want, got) in expected.items():
            if want != got:
                raise MatrixFormatError(directory / name, f"expected shape {want}, got {got}")

        try:
            Astar = Dictionary(A)
            Xstar = CoefficientMatrix(X)
        except AltMinError as e:
            raise MatrixFormatError(directory, str(e)) from e
        logger.info(f"Loaded instance {directory} (d={model.d}, r={model.r}, n={model.n}, s={model.s})")
        return Astar, Xstar, SampleSet(Y, meta=model)
