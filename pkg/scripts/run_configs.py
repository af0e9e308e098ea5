"""Run every config under configs/ and summarize the classifications."""
import sys
from pathlib import Path

from wilddyn.harness import load_config, run_experiment

root = Path(__file__).resolve().parent.parent
ok = True
for path in sorted((root / "configs").glob("*.toml")):
    cfg = load_config(path)
    res = run_experiment(cfg)
    ok &= res.checks_passed
    print(f"{path.name}: checks {'ok' if res.checks_passed else 'FAILED'}")
    for name, c in res.classifications.items():
        print(f"  {name}: predicted {c.label}, observed {c.observed}")
sys.exit(0 if ok else 1)
