"""
Parameter checkpoints: '<i8' layer count, '<i8' widths, then '<f8' values.
Used to hand theta0 from the initialization stage to the main stage.
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import ValidationError

from network.mlp import LayerSpec, ParameterVector
from utils.exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)


def save_checkpoint(params: ParameterVector, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sizes = np.asarray(params.spec.sizes, dtype="<i8")
    with open(path, "wb") as handle:
        handle.write(np.asarray([sizes.size], dtype="<i8").tobytes())
        handle.write(sizes.tobytes())
        handle.write(np.asarray(params.values, dtype="<f8").tobytes())
    logger.info(f"Saved checkpoint with {len(params)} parameters to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> ParameterVector:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise DimensionMismatchError("checkpoint is truncated", path=str(path))
    count = int(np.frombuffer(raw[:8], dtype="<i8")[0])
    header_end = 8 * (1 + count)
    if count < 2 or len(raw) < header_end:
        raise DimensionMismatchError("checkpoint header is truncated", path=str(path), layers=count)
    if (len(raw) - header_end) % 8:
        raise DimensionMismatchError("checkpoint payload is not a whole number of float64 values",
                                     path=str(path), payload_bytes=len(raw) - header_end)
    sizes = np.frombuffer(raw[8:header_end], dtype="<i8").tolist()
    values = np.frombuffer(raw[header_end:], dtype="<f8").copy()
    try:
        spec = LayerSpec(sizes=sizes)
    except ValidationError as e:
        raise DimensionMismatchError("checkpoint stores invalid layer widths", path=str(path), sizes=sizes) from e
    return ParameterVector(spec, values)
