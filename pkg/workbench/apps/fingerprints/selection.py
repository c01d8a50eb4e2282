"""Record selection."""

from typing import Optional

from .schemas import Database, Direction


def select(
    db: Database,
    floor: Optional[str] = None,
    building: Optional[str] = None,
    device: Optional[str] = None,
    direction: Optional[Direction] = None,
) -> Database:
    """Records matching every given selector, in their original order."""
    records = tuple(
        r
        for r in db.records
        if (floor is None or r.floor == floor)
        and (building is None or r.building == building)
        and (device is None or r.device == device)
        and (direction is None or r.direction == direction)
    )
    return db.model_copy(update={"records": records})

