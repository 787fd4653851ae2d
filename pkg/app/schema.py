from enum import Enum


class Label(str, Enum):
    """Recording class labels"""

    COVID = "covid"
    NON_COVID = "non_covid"

    @property
    def target(self) -> int:
        return 1 if self is Label.COVID else 0


LABEL_VALUES = tuple(label.value for label in Label)


class Gender(str, Enum):
    """Gender codes as written in the manifest"""

    MALE = "m"
    FEMALE = "f"
    UNKNOWN = "u"


class Split(str, Enum):
    DEV = "dev"
    TEST = "test"


class Track(str, Enum):
    """Leaderboard evaluation tracks"""

    VAL = "val"
    TEST = "test"


class ModelKind(str, Enum):
    LR = "lr"
    MLP = "mlp"
    RF = "rf"


MODEL_KIND_VALUES = tuple(kind.value for kind in ModelKind)

TARGET_RATE = 44100
FEATURE_DIM = 39
