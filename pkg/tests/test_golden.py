"""Golden-metric regression for the shipped presets.

Regenerate after an intentional behaviour change with
``python tests/test_golden.py``.
"""

import json
import sys
from pathlib import Path

import pytest

from rtmf import cli, config, simharness

GOLDEN = Path(__file__).parent / "golden"
HORIZON = ["t_steady=2.0"]
T_END = 4.0
# frozen from the dt = 1e-4 oracle run of hosmo-trapezoid over 20 s (3.55e-5)
HOSMO_TRAPEZOID_RMS_LIMIT = 1e-4


def current_metrics(name):
    scn = config.load_scenario(preset=name, overrides=HORIZON, t_end=T_END)
    return simharness.run(scn)[1].to_dict()


@pytest.mark.parametrize("name", config.SCENARIO_PRESETS)
def test_metrics_match_golden(name):
    want = json.loads((GOLDEN / f"{name}.json").read_text())
    got = current_metrics(name)
    assert got.keys() == want.keys()
    for key, value in want.items():
        if value is None:
            assert got[key] is None, key
        else:
            assert got[key] == pytest.approx(value, rel=1e-9, abs=1e-15), key


def test_hosmo_trapezoid_cli_threshold(tmp_path):
    assert cli.main(["simulate", "--preset", "hosmo-trapezoid", "--out", str(tmp_path)]) == 0
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    assert metrics["tracking_rms_steady"] < HOSMO_TRAPEZOID_RMS_LIMIT


if __name__ == "__main__":
    GOLDEN.mkdir(exist_ok=True)
    for preset in config.SCENARIO_PRESETS:
        (GOLDEN / f"{preset}.json").write_text(json.dumps(current_metrics(preset), indent=2, sort_keys=True) + "\n")
        print(f"wrote {preset}", file=sys.stderr)
