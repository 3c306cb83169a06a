# app/services/validation.py
import logging
from typing import Any, Iterable, List, Mapping, Union

from pydantic import ValidationError

from app.core.exceptions import DuplicateReceiverError, PathSetValidationError
from app.schemas.path import PathSet

logger = logging.getLogger(__name__)


def _describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"])
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def validate_path_set(raw: Union[PathSet, Mapping[str, Any]]) -> PathSet:
    """
    Return a normalized path set: azimuths wrapped to [-180, 180),
    elevations range-checked, non-finite values rejected.
    Applying it twice gives the same result.
    """
    data = raw.model_dump() if isinstance(raw, PathSet) else raw
    try:
        return PathSet.model_validate(data)
    except ValidationError as exc:
        rx_id = data.get("rx_id", "?") if isinstance(data, Mapping) else "?"
        raise PathSetValidationError(f"invalid path set '{rx_id}': {_describe(exc)}") from exc


def validate_path_sets(raws: Iterable[Union[PathSet, Mapping[str, Any]]]) -> List[PathSet]:
    """Validate every path set of a dataset and reject duplicate rx_ids."""
    seen = set()
    validated = []
    for raw in raws:
        path_set = validate_path_set(raw)
        if path_set.rx_id in seen:
            raise DuplicateReceiverError(path_set.rx_id)
        seen.add(path_set.rx_id)
        validated.append(path_set)
    logger.debug(f"Validated {len(validated)} path sets")
    return validated
