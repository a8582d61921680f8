"""The quick walkthrough scripts run end to end."""
import runpy
from pathlib import Path

import pytest

NOTEBOOKS = Path(__file__).resolve().parents[1] / "notebooks"


@pytest.mark.parametrize("name", ["01_synthetic_network.py", "03_gradients_and_attention.py"])
def test_notebook_runs(name, capsys):
    runpy.run_path(str(NOTEBOOKS / name), run_name="__main__")
    assert capsys.readouterr().out.strip()
