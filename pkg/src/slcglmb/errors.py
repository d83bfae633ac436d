"""Exception hierarchy shared by every module of the package."""


class TrackingError(Exception):
    """Base class for all errors raised by slcglmb."""


class DuplicateLabel(TrackingError):
    def __init__(self, label):
        super().__init__(f"duplicate label {label} in labeled finite set")
        self.label = label


class UnknownLabel(TrackingError):
    def __init__(self, label):
        super().__init__(f"label {label} is neither persisting nor birth")
        self.label = label


class LabelCollision(TrackingError):
    def __init__(self, labels):
        labels = sorted(labels)
        super().__init__(f"birth labels already in use: {labels}")
        self.labels = labels


class DegenerateNormalizer(TrackingError):
    """A normalizing constant fell below the configured floor."""


class ZeroClutterDensity(TrackingError):
    """Clutter intensity vanished at a measurement that was assigned to a track."""


class CombinatorialCap(TrackingError):
    def __init__(self, count, cap):
        super().__init__(f"{count} associations exceed the cap of {cap}; use ranked truncation")
        self.count = count
        self.cap = cap


class EmptyDensity(TrackingError):
    """Pruning removed every hypothesis."""


class UnsupportedDensity(TrackingError):
    """The density lacks the structure an operation requires."""


class CardinalityOverflow(TrackingError):
    """Brute-force enumeration would exceed the configured size."""


class StepUnderflow(TrackingError):
    """Finite-difference step is too small for the grid resolution."""


class ConfigError(TrackingError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
