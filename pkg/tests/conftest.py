import io
import json
from contextlib import redirect_stdout
from pathlib import Path

import numpy as np
import pytest

from ratio_convexity import cli

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    """Directory holding the committed CSV fixtures."""
    return DATA_DIR


@pytest.fixture
def run_cli():
    """Run the CLI in-process; returns (exit_code, stdout_text)."""

    def run(argv):
        buffer = io.StringIO()
        with redirect_stdout(buffer):
            code = cli.main(list(argv))
        return code, buffer.getvalue()

    return run


@pytest.fixture
def run_cli_json(run_cli):
    """Run the CLI and decode its stdout as JSON (asserts exit code 0)."""

    def run(argv):
        code, text = run_cli(argv)
        assert code == 0, f"exit {code}: {text[:500]}"
        return json.loads(text)

    return run


@pytest.fixture
def normal_csv(tmp_path):
    """A 60-observation standard-normal CSV, seeded."""
    rng = np.random.default_rng(7)
    path = tmp_path / "normal60.csv"
    lines = ["x"] + [repr(float(v)) for v in rng.standard_normal(60)]
    path.write_text("\n".join(lines) + "\n")
    return path
