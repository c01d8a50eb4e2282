"""Indoor-localization workbench: fingerprint databases, geomagnetic maps,
trace synthesis and neural localizers."""

__version__ = "1.0.0"
