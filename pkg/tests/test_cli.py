import json
from pathlib import Path

import pytest

from radrisk.cli import main


@pytest.fixture(scope="module")
def cohort_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cohort")
    code = main(["synth", "--seed", "17", "--lesions", "12", "--hrm-fraction", "0.25",
                 "--out", str(out)])
    assert code == 0
    code = main(["extract", "--manifest", str(out / "manifest.json"), "--out", str(out),
                 "--ng", "8", "--wavelet", "haar"])
    assert code == 0
    return out


def test_synth_writes_manifest_and_images(tmp_path):
    code = main(["synth", "--seed", "3", "--lesions", "3", "--out", str(tmp_path)])
    assert code == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert len(manifest["patients"]) == 3
    assert (tmp_path / "images").is_dir()
    first = manifest["patients"][0]["lesions"][0]
    assert (tmp_path / first["planning_mr"]["image"]).exists()


def test_extract_outputs_and_rerun_identical(cohort_dir):
    csv_path = cohort_dir / "features.csv"
    sidecar = json.loads((cohort_dir / "features.json").read_text())
    assert sidecar["rows"] == 48  # 12 lesions x (plan mr + plan ct + 2 followups)
    first = csv_path.read_bytes()
    code = main(["extract", "--manifest", str(cohort_dir / "manifest.json"),
                 "--out", str(cohort_dir), "--ng", "8", "--wavelet", "haar"])
    assert code == 0
    assert csv_path.read_bytes() == first  # resume path rewrites identical bytes


def test_extract_empty_manifest_header_only(tmp_path):
    (tmp_path / "empty.json").write_text(json.dumps({"patients": []}))
    code = main(["extract", "--manifest", str(tmp_path / "empty.json"), "--out", str(tmp_path)])
    assert code == 0
    lines = [l for l in (tmp_path / "features.csv").read_text().splitlines() if not l.startswith("#")]
    assert lines == ["lesion_id,role,date"]


def test_exit_code_config_error(tmp_path):
    assert main(["extract", "--manifest", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    assert main(["run", "--manifest", str(tmp_path / "missing.json")]) == 2
    assert main(["nonsense-command"]) == 2


def test_exit_code_data_error(tmp_path, cohort_dir):
    manifest = json.loads((cohort_dir / "manifest.json").read_text())
    lesion = manifest["patients"][0]["lesions"][0]
    img = cohort_dir / lesion["planning_mr"]["image"]
    img.write_text("{broken")
    try:
        code = main(["extract", "--manifest", str(cohort_dir / "manifest.json"),
                     "--out", str(cohort_dir / "broken-out"), "--ng", "8", "--force"])
        assert code == 3  # per-image failure logged, run continues, nonzero exit
        sidecar = json.loads((cohort_dir / "broken-out" / "features.json").read_text())
        assert len(sidecar["failures"]) == 1
        rows = (cohort_dir / "broken-out" / "features.csv").read_text()
        assert rows.count("\n") >= 40  # other images still extracted
    finally:
        code = main(["synth", "--seed", "17", "--lesions", "12", "--hrm-fraction", "0.25",
                     "--out", str(cohort_dir)])
        assert code == 0


def test_select_train_evaluate_km(cohort_dir, tmp_path):
    manifest = str(cohort_dir / "manifest.json")
    features = str(cohort_dir / "features.csv")
    out = tmp_path / "sel"
    assert main(["select", "--manifest", manifest, "--features", features,
                 "--set", "7", "--out", str(out)]) == 0
    selection = json.loads((out / "selection.json").read_text())
    assert selection["cap"] == max(1, selection["n_samples"] // 10)
    assert selection["selected"]
    assert (out / "table2_clinical.csv").exists()
    assert (out / "table2_wavelet.csv").exists()

    assert main(["train", "--manifest", manifest, "--features", features,
                 "--set", "2", "--out", str(out)]) == 0
    model = json.loads((out / "model.json").read_text())
    assert model["format_version"] == 1
    assert len(model["w"]) == len(model["feature_names"])

    assert main(["evaluate", "--manifest", manifest, "--features", features,
                 "--set", "2", "--repeats", "3", "--out", str(out)]) == 0
    cv = json.loads((out / "cv_report.json").read_text())
    assert cv["repeats"] == 3
    assert cv["straddle_counts"] == [0, 0, 0]
    assert (out / "roc_oof.svg").exists()

    assert main(["km", "--manifest", manifest, "--out", str(out)]) == 0
    assert (out / "km_cohort.svg").exists()
    assert (out / "km_cohort.csv").exists()


def test_run_bundle_and_reproducibility(cohort_dir, tmp_path):
    manifest = str(cohort_dir / "manifest.json")
    features = str(cohort_dir / "features.csv")
    args = ["run", "--manifest", manifest, "--features", features,
            "--sets", "1,2", "--repeats", "3", "--seed", "11"]
    out1, out2, out3 = (tmp_path / n for n in ("r1", "r2", "r3"))
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert main(args + ["--out", str(out3), "--threads", "2"]) == 0

    def read_all(root: Path):
        return {
            p.name: p.read_bytes().replace(str(root).encode(), b"OUT")
            for p in sorted(root.iterdir()) if p.is_file()
        }

    a, b, c = read_all(out1), read_all(out2), read_all(out3)
    assert set(a) == set(b) == set(c)
    for name in a:
        assert a[name] == b[name], name  # identical run -> identical bytes
        assert a[name] == c[name], name  # thread count must not matter

    report = json.loads((out1 / "report.json").read_text())
    assert set(report["sets"]) == {"1", "2"}
    assert "mean_auc" in report["sets"]["1"]
    table1 = (out1 / "table1.csv").read_text()
    assert "Set 1," in table1 and "Set 2," in table1
    txt = (out1 / "table1.txt").read_text()
    assert "Clinical data" in txt and "AUC score" in txt


def test_run_emits_seven_row_table(cohort_dir, tmp_path):
    out = tmp_path / "allsets"
    code = main(["run", "--manifest", str(cohort_dir / "manifest.json"),
                 "--features", str(cohort_dir / "features.csv"),
                 "--sets", "1-7", "--repeats", "2", "--out", str(out)])
    assert code == 0
    rows = [l for l in (out / "table1.csv").read_text().splitlines()
            if l.startswith("Set ")]
    assert len(rows) == 7
    assert rows[0].startswith("Set 1,x,,,,,")       # clinical only
    assert rows[6].startswith("Set 7,x,x,x,x,x,x")  # everything
    txt = (out / "table1.txt").read_text().splitlines()
    assert txt[0].strip().startswith("Set 1")
    assert txt[-1].startswith("AUC score")
    assert len([c for c in txt[1] if c == "x"]) == 7  # clinical row all sets


def test_synth_nifti_format_roundtrip(tmp_path):
    out = tmp_path / "nifti"
    assert main(["synth", "--seed", "2", "--lesions", "3", "--format", "nifti1",
                 "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    first = manifest["patients"][0]["lesions"][0]["planning_mr"]["image"]
    assert first.endswith(".nii")
    assert main(["extract", "--manifest", str(out / "manifest.json"),
                 "--out", str(out), "--ng", "8", "--wavelet", "none"]) == 0
    lines = (out / "features.csv").read_text().splitlines()
    header = [l for l in lines if l.startswith("lesion_id")][0]
    assert len(header.split(",")) == 3 + 98


def test_run_with_config_file(cohort_dir, tmp_path):
    cfg = {"sets": "1", "repeats": 2, "seed": 4}
    cfg_path = tmp_path / "pipeline.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    code = main(["run", "--manifest", str(cohort_dir / "manifest.json"),
                 "--features", str(cohort_dir / "features.csv"),
                 "--config", str(cfg_path), "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["repeats"] == 2
    assert report["config"]["sets"] == [1]
    # flags take precedence over the config file
    out2 = tmp_path / "out2"
    code = main(["run", "--manifest", str(cohort_dir / "manifest.json"),
                 "--features", str(cohort_dir / "features.csv"),
                 "--config", str(cfg_path), "--repeats", "3", "--out", str(out2)])
    assert code == 0
    assert json.loads((out2 / "report.json").read_text())["config"]["repeats"] == 3
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"unknown_key": 1}))
    assert main(["run", "--manifest", str(cohort_dir / "manifest.json"),
                 "--features", str(cohort_dir / "features.csv"),
                 "--config", str(bad), "--out", str(tmp_path / "x")]) == 2


def test_run_auto_extracts_when_no_features_given(tmp_path):
    cohort = tmp_path / "c"
    assert main(["synth", "--seed", "31", "--lesions", "8", "--hrm-fraction", "0.3",
                 "--out", str(cohort)]) == 0
    out = tmp_path / "run"
    code = main(["run", "--manifest", str(cohort / "manifest.json"),
                 "--sets", "2", "--repeats", "2", "--ng", "8", "--wavelet", "none",
                 "--out", str(out)])
    assert code == 0
    assert (out / "features.csv").exists()  # auto-extraction artifact
    assert (out / "report.json").exists()


def test_env_var_default_out(cohort_dir, tmp_path, monkeypatch):
    monkeypatch.setenv("RADRISK_OUT", str(tmp_path / "envout"))
    monkeypatch.chdir(tmp_path)
    assert main(["km", "--manifest", str(cohort_dir / "manifest.json")]) == 0
    assert (tmp_path / "envout" / "km_cohort.svg").exists()
