from __future__ import annotations

import numpy as np
import pytest

from compmdp.model import Exit, make_romdp

TASK_TEXT = """\
mdp task {
  arity 1 -> 1
  actions [work]
  positions { q reward 4 }
  entry 1 -> q
  trans q work { q: 0.2, exit 1: 0.8 }
}
"""


def task_mdp(reward: float = 4.0, loop: float = 0.2):
    return make_romdp(1, 1, ["*"], {"q": reward}, ["q"], {("q", "*"): {"q": loop, Exit(1): 1 - loop}})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def task_file(tmp_path):
    path = tmp_path / "task.omdp"
    path.write_text(TASK_TEXT)
    return path
