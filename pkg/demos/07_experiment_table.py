"""The experiment comparison table: remote-controlled vs autonomous vs
autonomous in airflow, five seeds each, aggregated the same way as the
paper-style results table (trajectory error, duration, collisions)."""

import pathlib

from tunnelblimp.harness import batch_report, load_config

HERE = pathlib.Path(__file__).parent
scenarios = HERE.parent / "scenarios"

configs = [load_config(scenarios / name) for name in
           ("s_track_rc.yaml", "s_track_auto.yaml", "s_track_airflow.yaml")]
report = batch_report(configs, seeds=[0, 1, 2, 3, 4])
print(report.render_text())

out = HERE / "output"
out.mkdir(exist_ok=True)
(out / "experiment_table.txt").write_text(report.render_text() + "\n")
(out / "experiment_table.csv").write_text(report.render_csv() + "\n")
print(f"\ntables written to {out}/experiment_table.[txt|csv]")
