"""
Explicit-state files in and out
================================

Models travel as plain-text explicit-state files: a ``.tra`` file with
one transition per line, a ``.lab`` file naming states, and optional
reward files.  This script builds a small reward model, writes it out,
shows the files, loads them back, and checks the round trip is exact.
"""

import tempfile
from pathlib import Path

import soundreach as sr

# A maintenance planning toy: operate (earn 2, risk degrading or a
# terminal breakdown), repair (pay 1, mostly reset), or retire (the
# goal).  Every plan eventually ends in retirement, so the expected
# total reward until then is finite.  Rewards live on the choices.
model = sr.validate_model(
    [
        [{0: 0.65, 1: 0.3, 2: 0.05}, {2: 1.0}],   # run (5% breakdown); retire
        [{0: 0.1, 1: 0.8, 2: 0.1}, {0: 0.9, 2: 0.1}],  # limp along; or repair
        [{2: 1.0}],
    ],
    rewards=[[2.0, 0.0], [0.5, -1.0], [0.0]],
    labels={"init": [0], "goal": [2]},
    choice_labels=["run", "retire", "limp", "repair", None],
)

with tempfile.TemporaryDirectory() as scratch:
    scratch = Path(scratch)
    tra, lab, trew = scratch / "plant.tra", scratch / "plant.lab", scratch / "plant.trew"
    sr.write_model(model, tra, lab, trew)

    print("plant.tra — header counts states/choices/transitions, then")
    print("one 'state choice target probability [action]' line each:")
    for line in tra.read_text().splitlines():
        print(f"  {line}")
    print()
    print("plant.lab — label declarations, then per-state assignments:")
    for line in lab.read_text().splitlines():
        print(f"  {line}")
    print()

    # Probabilities are written with repr, so nothing is lost in text.
    bundle = sr.load_model(tra, lab, trew_path=trew)
    assert bundle.model == model, "round trip changed the model"
    print("loaded back: equal to the original, bit for bit")

    # The loaded bundle plugs straight into a query: the expected total
    # reward before retirement, maximized over the two plans.
    best = sr.solve(bundle.model, "goal",
                    sr.SolverConfig(objective=sr.Objective.REWARD,
                                    lower=-10.0, upper=50.0))
    print(f"best expected reward before retirement: {best.value:.6f} "
          f"(certified interval [{best.lower:.6f}, {best.upper:.6f}])")
