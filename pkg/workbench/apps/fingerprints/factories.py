"""factory-boy factories for fingerprint records."""

import factory

from .schemas import AP_COUNT, RSS_SENTINEL, Database, Direction, FingerprintRecord


class FingerprintRecordFactory(factory.Factory):
    """Record with no detected AP at a sequential grid location."""

    class Meta:
        model = FingerprintRecord

    loc_x = factory.Sequence(lambda n: n % 10)
    loc_y = factory.Sequence(lambda n: n // 10)
    floor = "5E"
    building = "IBSS"
    geo = (-25.6125, -5.79286, -29.9464)
    ori = (97.59351, -1.2, 0.4)
    direction = Direction.NORTH
    device = "device-a"
    timestamp = factory.Sequence(lambda n: 1_546_300_800_000 + 1000 * n)

    class Params:
        # One AP detected: detected=(ap, dbm)
        detected = None

    @factory.lazy_attribute
    def rss(self):
        rss = [RSS_SENTINEL] * AP_COUNT
        if self.detected is not None:
            ap, dbm = self.detected
            rss[ap] = dbm
        return tuple(rss)


def make_database(count: int, **kwargs) -> Database:
    """Database of ``count`` factory records sharing ``kwargs``."""
    return Database(records=tuple(FingerprintRecordFactory.create_batch(count, **kwargs)))
