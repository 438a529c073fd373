import json
import math

import pytest

from triplehelix.cli import main
from triplehelix.errors import ConfigError, EmptyDatasetError
from triplehelix.ingestion import records_to_csv
from triplehelix.pipeline import AnalysisConfig, analyze, run_pipeline
from triplehelix.synthgen import generate_dataset, oracle_transmission3, parity_spec, provinces_spec
from triplehelix.taxonomy import default_size_scheme


def write_dataset(tmp_path, spec, name="firms"):
    records = generate_dataset(spec)
    data = tmp_path / f"{name}.csv"
    with open(data, "w", newline="", encoding="utf-8") as fh:
        records_to_csv(records, fh)
    hier = tmp_path / f"{name}_hierarchy.tsv"
    hier.write_text("\n".join("\t".join(r) for r in spec.hierarchy_rows()) + "\n", encoding="utf-8")
    return records, data, hier


@pytest.fixture
def three_provinces(tmp_path):
    spec = provinces_spec(provinces=3, cities_per_province=4, firms=12_000, seed=7)
    return write_dataset(tmp_path, spec)


def test_parity_province_dominates(three_provinces):
    records, data, hier = three_provinces
    result = analyze(AnalysisConfig([data], hierarchy=hier))
    rep = result.report
    top = rep.groups[0]
    assert top.label == "Province00"
    assert top.delta_t < 0 and all(g.delta_t > top.delta_t for g in rep.groups[1:])
    sizes = default_size_scheme()
    mine = [(r.city_raw, sizes.classify(r.employees), r.nace[:2]) for r in records if r.city_raw.startswith("Province00")]
    assert top.t_g == pytest.approx(oracle_transmission3(mine), abs=1e-12)
    assert top.t_g == pytest.approx(-1.0, abs=1e-3)
    assert rep.total_t == pytest.approx(rep.t0 + rep.sum_delta_t, abs=1e-15)


def test_audit_conservation(three_provinces, tmp_path):
    _, data, hier = three_provinces
    text = data.read_text(encoding="utf-8").splitlines()
    text += [
        "X1,2009,,21,10",  # missing city
        "X2,2009,Province01-city0,99x,10",  # invalid NACE
        "X3,2009,Province01-city0,21,-3",  # negative employees
        "X4,2009,Nowhere,21,10",  # unresolved geography
        "X5,2005,Province01-city0,21,10",  # outside year window
        "X6,2009,Province01-city0",  # unparseable
    ]
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(text) + "\n", encoding="utf-8")
    audit = analyze(AnalysisConfig([bad], hierarchy=hier)).audit
    assert audit["included"] + audit["excluded_total"] == audit["parsed_rows"]
    assert audit["included"] == 12_000
    assert audit["excluded"] == {
        "invalid NACE": 1,
        "missing city": 1,
        "negative employees": 1,
        "outside year window": 1,
        "unparseable row": 1,
        "unresolved geography": 1,
    }
    assert audit["unknown_city_names"] == 1


def test_level2_counts_unresolved_cities(tmp_path):
    spec = provinces_spec(provinces=2, cities_per_province=4, firms=4_000, seed=3)
    _, data, hier = write_dataset(tmp_path, spec)
    with open(data, "a", encoding="utf-8") as fh:
        fh.write("Y1,2009,Atlantis,26,30\nY2,2010,Atlantis,26,30\n")
    result = analyze(AnalysisConfig([data], hierarchy=hier, level=2))
    assert result.report.level == 2
    assert {g.label for g in result.report.groups} == {r[1] for r in spec.hierarchy_rows()}
    assert result.audit["excluded"] == {"unresolved geography": 2}
    assert result.audit["included"] == 4_000


def test_sector_filter_without_matches_is_empty(tmp_path):
    _, data, hier = write_dataset(tmp_path, parity_spec(firms=400))
    with pytest.raises(EmptyDatasetError, match="empty post-filter dataset"):
        analyze(AnalysisConfig([data], hierarchy=hier, sector="kis"))
    out = tmp_path / "out"
    code = main(["analyze", "--input", str(data), "--hierarchy", str(hier), "--sector", "kis", "--out", str(out)])
    assert code == 1


@pytest.mark.parametrize(
    "changes",
    [{"level": 3}, {"level": 0}, {"digits": 5}, {"sector": "bio"}, {"years": (2010, 2008)}, {"workers": 0}],
)
def test_config_errors(three_provinces, changes):
    _, data, hier = three_provinces
    config = AnalysisConfig([data], hierarchy=hier)
    for k, v in changes.items():
        setattr(config, k, v)
    with pytest.raises(ConfigError):
        analyze(config)


def test_cli_exit_codes(three_provinces, tmp_path, capsys):
    _, data, hier = three_provinces
    out = str(tmp_path / "o")
    assert main(["analyze", "--input", str(data), "--hierarchy", str(hier), "--out", out, "--no-figures"]) == 0
    with pytest.raises(SystemExit) as exc:
        main(["analyze", "--input", str(data), "--level", "3", "--out", out])
    assert exc.value.code == 2
    assert main(["analyze", "--input", str(tmp_path / "missing.csv"), "--out", out]) == 2
    assert main(["analyze", "--input", str(data), "--hierarchy", str(tmp_path / "nope.tsv"), "--out", out]) == 2
    schema = tmp_path / "schema.json"
    schema.write_text(json.dumps({"city": "town"}), encoding="utf-8")
    assert main(["analyze", "--input", str(data), "--schema", str(schema), "--out", out]) == 2


def _outputs(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_outputs_byte_identical_across_workers_and_runs(three_provinces, tmp_path):
    _, data, hier = three_provinces
    seen = []
    for i, workers in enumerate((1, 2, 8, 1)):
        out = tmp_path / f"run{i}"
        result = run_pipeline(AnalysisConfig([data], hierarchy=hier, out=out, workers=workers))
        assert {p.name for p in result.files} == {
            "report.txt", "report.csv", "report.json", "regions_level1.csv", "audit.json", "issues.csv", "report.png"
        }
        seen.append(_outputs(out))
    assert all(s == seen[0] for s in seen[1:])


def test_report_files_agree(three_provinces, tmp_path):
    _, data, hier = three_provinces
    out = tmp_path / "o"
    result = run_pipeline(AnalysisConfig([data], hierarchy=hier, out=out, figures=False))
    doc = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert doc["total_t_bits"] == result.report.total_t
    assert math.isclose(doc["t0_mbit"], result.report.t0 * 1000)
    csv_text = (out / "report.csv").read_text(encoding="utf-8")
    assert f"{result.report.groups[0].delta_t * 1000:.2f}" in csv_text
    assert not (out / "report.png").exists()


def test_cli_compare_correlate_profile_synthgen(tmp_path, capsys):
    spec = {
        "seed": 11,
        "regions": [
            {"province": "P1", "city": "P1-a", "firms": 300, "size": {"2-4": 0.5, "20-49": 0.5},
             "tech": {"21": 0.5, "62": 0.5}},
            {"province": "P1", "city": "P1-b", "firms": 300, "joint": [["2-4", "21", 0.5], ["20-49", "62", 0.5]]},
            {"province": "P2", "city": "P2-a", "firms": 200, "joint": [["2-4", "62", 0.5], ["20-49", "21", 0.5]]},
            {"province": "P2", "city": "P2-b", "firms": 200, "size": {"2-4": 1.0}, "tech": {"26": 0.5, "72": 0.5}},
            {"province": "P3", "city": "P3-a", "firms": 100, "joint": [["5-9", "21", 1.0]]},
            {"province": "P3", "city": "P3-b", "firms": 100, "joint": [["2-4", "63", 0.5], ["5-9", "21", 0.5]]},
        ],
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec), encoding="utf-8")
    data, hier = tmp_path / "d.csv", tmp_path / "h.tsv"
    assert main(["synthgen", "--spec", str(spec_path), "--out", str(data), "--hierarchy-out", str(hier)]) == 0
    first = data.read_bytes()
    assert main(["synthgen", "--spec", str(spec_path), "--out", str(data)]) == 0
    assert data.read_bytes() == first
    assert len(first.decode().splitlines()) == 1201

    base, sub = tmp_path / "base", tmp_path / "sub"
    common = ["--input", str(data), "--hierarchy", str(hier), "--no-figures"]
    assert main(["analyze", *common, "--out", str(base)]) == 0
    assert main(["analyze", *common, "--sector", "hts", "--out", str(sub)]) == 0
    cmp_path = tmp_path / "cmp.csv"
    assert main(["compare", "--base", str(base / "report.json"), "--subset", str(sub / "report.json"),
                 "--out", str(cmp_path)]) == 0
    rows = cmp_path.read_text(encoding="utf-8").splitlines()
    assert rows[0].startswith("region,kind,base_n")
    assert any(r.startswith("(T0),summary") for r in rows)

    capsys.readouterr()
    assert main(["correlate", str(base / "report.json"), str(base / "regions_level1.csv")]) == 0
    out = capsys.readouterr().out
    assert "pearson_r = 1.000000" in out and "spearman_rho = 1.000000" in out

    prof = tmp_path / "prof"
    assert main(["profile", "--input", str(data), "--hierarchy", str(hier), "--out", str(prof)]) == 0
    d = json.loads((prof / "profile.json").read_text(encoding="utf-8"))
    assert d["parsed_rows"] == 1200 and d["included"] == 1200
    assert (prof / "profile.csv").exists()
    assert any(p.suffix == ".png" for p in prof.iterdir())


def test_correlate_too_few_labels(tmp_path):
    a = tmp_path / "a.csv"
    a.write_text("label,v\nx,1\ny,2\n", encoding="utf-8")
    assert main(["correlate", str(a), str(a)]) == 1
