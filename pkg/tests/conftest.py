import numpy as np
import pytest
from hypothesis import settings

from radtag.locextract import default_rules
from radtag.preprocess import PreprocessConfig
from radtag.taxonomy import default_trees

settings.register_profile("radtag", deadline=None, max_examples=200)
settings.load_profile("radtag")

REFERENCE_TEXT = (
    "Rx de tórax: Cambios pulmonares crónicos severos. Signos de fibrosis bibasal. "
    "Sutiles infiltrados y pseudonódulos milimétricos en vidrio deslustrado localizados "
    "en bases. Cifosis severa."
)
REFERENCE_REPORT = (
    "cambi pulmonar cronic sever . sign fibrosis bibasal . sutil infiltr pseudonodul "
    "milimetr vidri deslustr localiz bas . cifosis sever ."
)
REFERENCE_SENTENCE_LABELS = [
    ["chronic changes"],
    ["pulmonary fibrosis"],
    ["pseudonodule", "ground glass pattern"],
    ["kyphosis"],
]


@pytest.fixture(scope="session")
def pre_cfg():
    return PreprocessConfig.default()


@pytest.fixture(scope="session")
def trees():
    return default_trees()


@pytest.fixture(scope="session")
def rules():
    return default_rules()


@pytest.fixture
def rng():
    return np.random.default_rng(0)
