"""
The staged pipeline, driven by a config file
============================================

``feedbackctl`` runs the same stages from a shell; here we call its entry
point directly. Every stage writes into a content-addressed directory
under ``out/``, so rerunning an unchanged stage reproduces identical files.
"""
import json
import shutil
from pathlib import Path

from feedbackml.cli import main
from feedbackml.synthetic import keyword_feedback, write_csv

here = Path(__file__).resolve().parent
work = Path("pipeline_demo")
work.mkdir(exist_ok=True)
write_csv(keyword_feedback(400, seed=0, latin_docs=5, compliments=10), work / "feedback.csv")
shutil.copy(here / "pipeline_config.json", work / "config.json")

config = str(work / "config.json")
for stage in ("prepare", "embed", "train", "evaluate", "report"):
    code = main([stage, "--config", config, "-q"])
    print(stage, "->", "ok" if code == 0 else f"exit {code}")

# Overrides take dotted keys, so a variant run needs no new file.
main(["train", "--config", config, "-q", "--set", "train.max_epochs=2"])

(evaluate,) = (work / "out").glob("evaluate-*")
metrics = json.loads((evaluate / "metrics.json").read_text(encoding="utf-8"))
print("mean accuracy over folds:", round(metrics["aggregate"]["accuracy"]["mean"], 4))

queries = work / "queries.jsonl"
queries.write_text('{"id": "q1", "text": "Маш муу үйлчилгээ"}\n', encoding="utf-8")
main(["predict", "--config", config, "-q", "--input", str(queries), "--output", str(work / "predictions.jsonl")])
print((work / "predictions.jsonl").read_text(encoding="utf-8"))
