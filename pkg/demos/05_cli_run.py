"""Drive the command line end to end on a reduced copy of the shipped config.

Runs: show-config -> train -> evaluate -> forecast, printing where each
artifact lands. Everything is written under a temporary directory.
"""

import dataclasses
import json
import subprocess
import sys
import tempfile
from pathlib import Path

from rackcast.config import GbtParams, LstmParams
from rackcast.data_ingest import generate_synthetic, write_csv
from rackcast.pipeline import shipped_config


def rackcast(*args):
    out = subprocess.run([sys.executable, "-m", "rackcast", *args], capture_output=True, text=True)
    print(f"$ rackcast {' '.join(args)}  -> exit {out.returncode}")
    if out.stdout.strip():
        print("  " + out.stdout.strip().replace("\n", "\n  "))
    if out.stderr.strip():
        print("  " + out.stderr.strip())
    return out


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    base = shipped_config()
    syn = dataclasses.replace(base.data.synthetic, n_items=8, n_weeks=60)
    cfg = dataclasses.replace(
        base, data=dataclasses.replace(base.data, synthetic=syn),
        hyperparams=dataclasses.replace(base.hyperparams, gbt=GbtParams(n_trees=30),
                                        lstm=LstmParams(hidden_size=8, epochs=5)),
        output_dir=str(tmp / "run"))
    cfg_path = tmp / "demo.json"
    cfg_path.write_text(cfg.dumps())

    rackcast("train", "--config", str(cfg_path))
    rackcast("evaluate", "--config", str(cfg_path))
    print("artifacts:", sorted(str(p.relative_to(tmp / "run")) for p in (tmp / "run").rglob("*") if p.is_file()))

    # four new weeks beyond the training history
    longer = generate_synthetic(dataclasses.replace(syn, n_weeks=64))
    new = [r for r in longer.records if (r.year, r.month, r.week_no) >
           max((q.year, q.month, q.week_no) for q in generate_synthetic(syn).records)]
    write_csv(new, tmp / "new_weeks.csv")
    rackcast("forecast", "--config", str(cfg_path), "--input", str(tmp / "new_weeks.csv"))
    print((tmp / "run" / "forecast.csv").read_text().splitlines()[:3])

    rackcast("evaluate", "--config", str(cfg_path), "--output-dir", str(tmp / "empty"))
    report = json.loads((tmp / "run" / "eval" / "report.json").read_text())
    print("uplift:", report["uplift"])
    print("this reduced run is too small (and the models too lightly trained) for the selector to")
    print("pay off reliably; `rackcast train && rackcast evaluate` on the shipped config is the real test")
