"""Timing-report formatting and figure rendering."""
import numpy as np
import pytest

from actmap.inference import ThroughputReport
from actmap.mapdoc import ActivityMapDoc, Cluster
from actmap.report import (StageTiming, format_hms, format_multiple, render_timing_report,
                           save_activity_map_figure, save_sweep_figure, save_training_figure)
from actmap.training import EpochStats


def test_format_hms():
    assert format_hms(0) == "00:00:00"
    assert format_hms(1293) == "00:21:33"
    assert format_hms(5106) == "01:25:06"


@pytest.mark.parametrize("value,want", [
    (3.949, "3.9"), (4.0, "4"), (0.857, "0.86"), (154.0, "154"),
    (4.76, "4.8"), (0.0, "0"), (1.0, "1"),
])
def test_format_multiple_two_significant_digits(value, want):
    assert format_multiple(value) == want


def test_timing_report_reference_style():
    # recorded durations summing to 00:21:33 over a session 4x as long
    timings = [StageTiming("typing activity proposal network", 1258.0),
               StageTiming("low-parameter typing activity classification", 26.0),
               StageTiming("interactive visualization of typing activities", 9.0)]
    text = render_timing_report(timings, session_seconds=4 * 1293.0)
    lines = text.strip().splitlines()
    assert lines[1].endswith("00:20:58")
    assert lines[-1].startswith("total inference time")
    assert lines[-1].endswith("00:21:33 (4 ×)")


def test_timing_rejects_negative_duration():
    with pytest.raises(ValueError):
        StageTiming("x", -1.0)


def test_figures_render_to_files(tmp_path):
    reports = [ThroughputReport(b, s / 3, s, 1000, 1.0)
               for b, s in [(1, 17.0), (2, 30.0), (4, 61.0), (8, 110.0), (16, 154.0), (32, 118.0)]]
    save_sweep_figure(reports, 16, tmp_path / "sweep.png")
    history = [EpochStats(e, 1.0 / e, 1.2 / e, min(1.0, 0.5 + e / 10)) for e in range(1, 8)]
    save_training_figure(history, tmp_path / "train.png")
    doc = ActivityMapDoc("s", 100.0, "https://h/v",
                         clusters=[Cluster("typing", "Ann", 5.0, 25.0, 3, 0.8, "https://h/v?t=5")])
    doc.evaluation = {"tp": [0], "fp": [], "fn": [{"person": "Bob", "kind": "typing",
                                                  "t_start": 50.0, "t_end": 60.0}]}
    save_activity_map_figure(doc, tmp_path / "map.png")
    for name in ("sweep.png", "train.png", "map.png"):
        assert (tmp_path / name).stat().st_size > 4000


def test_empty_map_figure(tmp_path):
    doc = ActivityMapDoc("s", 60.0, "https://h/v", clusters=[])
    save_activity_map_figure(doc, tmp_path / "empty.png")
    assert (tmp_path / "empty.png").exists()
