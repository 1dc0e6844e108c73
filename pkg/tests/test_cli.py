import json
import subprocess
import sys

import numpy as np
import pytest

from crg_distill import FeatureMap, FeatureMapBatch, save_feature_maps
from crg_distill.cli import main
from crg_distill.config import RunConfig
from conftest import nonneg_map, valid_gradient_pair


@pytest.fixture
def pair_paths(tmp_path, rng):
    t, s = valid_gradient_pair(rng, 4, 3, 3)
    tp, sp = tmp_path / "t.npy", tmp_path / "s.npy"
    save_feature_maps(FeatureMapBatch((t,)), tp)
    save_feature_maps(FeatureMapBatch((s,)), sp)
    return str(tp), str(sp)


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_loss_identical_files_all_zero(tmp_path, rng, capsys):
    m = nonneg_map(rng, 4, 3, 3)
    path = tmp_path / "m.npy"
    save_feature_maps(FeatureMapBatch((m,)), path)
    code, out, _ = run_cli(["loss", str(path), str(path)], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["mean"] == {"vertex": 0.0, "edge": 0.0, "spectral": 0.0, "multi_level": 0.0}


@pytest.mark.filterwarnings("ignore::crg_distill.errors.DegenerateSpectrumWarning")
def test_loss_hand_case_edge_value(tmp_path, capsys):
    """Two identical teacher channels vs orthogonal student channels: L_E = 0.125."""
    t = FeatureMap(np.array([1.0, 0.0, 1.0, 0.0]).reshape(2, 1, 2))
    s = FeatureMap(np.array([1.0, 0.0, 0.0, 1.0]).reshape(2, 1, 2))
    tp, sp = tmp_path / "t.npy", tmp_path / "s.npy"
    save_feature_maps(FeatureMapBatch((t,)), tp)
    save_feature_maps(FeatureMapBatch((s,)), sp)
    code, out, _ = run_cli(["loss", str(tp), str(sp)], capsys)
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["per_sample"][0]["edge"] - 0.125) < 1e-9
    assert abs(doc["per_sample"][0]["spectral"] - 0.29289) < 1e-4


def test_loss_missing_file_exit_2_names_path(tmp_path, capsys, rng):
    m = nonneg_map(rng, 2, 2, 2)
    sp = tmp_path / "s.npy"
    save_feature_maps(FeatureMapBatch((m,)), sp)
    missing = str(tmp_path / "missing.npy")
    code, out, err = run_cli(["loss", missing, str(sp)], capsys)
    assert code == 2
    assert missing in err
    assert err.count("\n") == 1


def test_spectrum_identical_channels(tmp_path, rng, capsys):
    base = rng.standard_normal((1, 2, 2))
    m = FeatureMap(np.repeat(base, 3, axis=0))
    path = tmp_path / "m.npy"
    save_feature_maps(FeatureMapBatch((m,)), path)
    code, out, _ = run_cli(["spectrum", str(path)], capsys)
    assert code == 0
    doc = json.loads(out)
    entry = doc["per_sample"][0]
    np.testing.assert_allclose(entry["eigenvalues"], [0.0, 1.0, 1.0], atol=1e-8)
    assert entry["degeneracy_flag"] is True


def test_spectrum_hand_embedding(tmp_path, capsys):
    t = FeatureMap(np.array([1.0, 0.0, 1.0, 0.0]).reshape(2, 1, 2))
    path = tmp_path / "t.npy"
    save_feature_maps(FeatureMapBatch((t,)), path)
    code, out, _ = run_cli(["spectrum", str(path), "--n", "1"], capsys)
    doc = json.loads(out)
    emb = np.array(doc["per_sample"][0]["embedding"])
    np.testing.assert_allclose(emb, [[0.70711], [-0.70711]], atol=1e-5)


def test_check_pass_and_corrupt_hook(pair_paths, capsys):
    tp, sp = pair_paths
    code, out, _ = run_cli(["check", tp, sp], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["passed"] is True
    assert doc["terms"]["vertex"]["max_rel_error"] <= 1e-6
    assert doc["gradients"]["vertex"] is not None

    code, out, _ = run_cli(["check", tp, sp, "--corrupt-gradient", "spectral"], capsys)
    assert code == 1
    assert json.loads(out)["passed"] is False


def test_check_identical_inputs_zero_errors(tmp_path, rng, capsys):
    m = nonneg_map(rng, 4, 3, 3)
    path = tmp_path / "m.npy"
    save_feature_maps(FeatureMapBatch((m,)), path)
    code, out, _ = run_cli(["check", str(path), str(path)], capsys)
    assert code == 0
    doc = json.loads(out)
    for term in doc["terms"].values():
        assert term["max_rel_error"] == 0.0


def test_distill_sim_zero_steps(tmp_path, capsys):
    teacher = FeatureMap(4.0 * np.random.default_rng(14).standard_normal((4, 4, 4)))
    path = tmp_path / "t.npy"
    save_feature_maps(FeatureMapBatch((teacher,)), path)
    code, out, _ = run_cli(["distill-sim", str(path), "--steps", "0"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["trajectory"]) == 1
    assert doc["trajectory"][0] == doc["initial"]["multi_level"]


def test_distill_sim_out_of_domain_seed_exits_3(tmp_path, rng, capsys):
    """A unit-normal init with a non-positive adjacency row sum is a divergence."""
    m = nonneg_map(rng, 3, 3, 3)
    path = tmp_path / "t.npy"
    save_feature_maps(FeatureMapBatch((m,)), path)
    code, _, err = run_cli(["distill-sim", str(path), "--steps", "0", "--seed", "0"], capsys)
    assert code == 3
    assert "domain" in err


def test_only_flag_combinations_echo(pair_paths, capsys):
    """All eight loss-term toggle rows are reachable and echoed."""
    tp, sp = pair_paths
    combos = ["", "V", "E", "S", "VE", "VS", "ES", "VES"]
    for combo in combos:
        code, out, _ = run_cli(["loss", tp, sp, "--only", combo], capsys)
        assert code == 0
        echo = json.loads(out)["config_echo"]
        assert echo["use_vertex"] == ("V" in combo)
        assert echo["use_edge"] == ("E" in combo)
        assert echo["use_spectral"] == ("S" in combo)


def test_mask_toggle_flags_echo(pair_paths, capsys):
    tp, sp = pair_paths
    code, out, _ = run_cli(
        ["loss", tp, sp, "--no-spatial-mask", "--no-relation-mask"], capsys
    )
    echo = json.loads(out)["config_echo"]
    assert echo["use_spatial_mask"] is False
    assert echo["use_channel_mask"] is True
    assert echo["use_relation_mask"] is False


def test_config_echo_round_trips(pair_paths, capsys):
    tp, sp = pair_paths
    code, out, _ = run_cli(
        ["loss", tp, sp, "--alpha", "0.5", "--n", "2", "--eigen", "smallest", "--seed", "9"],
        capsys,
    )
    echo = json.loads(out)["config_echo"]
    rebuilt = RunConfig.from_dict(echo)
    assert json.dumps(rebuilt.to_dict()) == json.dumps(echo)
    assert isinstance(echo["n"], int) and echo["n"] == 2


def test_n_fraction_parsing(pair_paths, capsys):
    tp, sp = pair_paths
    code, out, _ = run_cli(["loss", tp, sp, "--n", "0.25"], capsys)
    assert code == 0
    assert json.loads(out)["config_echo"]["n"] == 0.25
    code, _, err = run_cli(["loss", tp, sp, "--n", "2.5"], capsys)
    assert code == 2


def test_adapter_flag(tmp_path, rng, capsys):
    """A 4->3 channel projection aligns the student with a 3-channel teacher."""
    t = nonneg_map(rng, 3, 2, 2)
    s = nonneg_map(rng, 4, 2, 2)
    w = np.abs(rng.standard_normal((3, 4))) + 0.1
    tp, sp, wp = tmp_path / "t.npy", tmp_path / "s.npy", tmp_path / "w.npy"
    save_feature_maps(FeatureMapBatch((t,)), tp)
    save_feature_maps(FeatureMapBatch((s,)), sp)
    np.save(wp, w)
    code, out, _ = run_cli(["loss", str(tp), str(sp), "--adapter", str(wp)], capsys)
    assert code == 0
    assert json.loads(out)["per_sample"][0]["vertex"] > 0

    code, _, err = run_cli(["loss", str(tp), str(sp)], capsys)
    assert code == 2  # without the adapter the shapes mismatch


def test_out_flag_writes_file(pair_paths, tmp_path, capsys):
    tp, sp = pair_paths
    out_path = tmp_path / "report.json"
    code, out, _ = run_cli(["loss", tp, sp, "--out", str(out_path)], capsys)
    assert code == 0
    assert out == ""
    doc = json.loads(out_path.read_text())
    assert "per_sample" in doc


def test_rank4_batch_report(tmp_path, rng, capsys):
    maps_t = tuple(nonneg_map(rng, 3, 2, 2) for _ in range(3))
    maps_s = tuple(nonneg_map(rng, 3, 2, 2) for _ in range(3))
    tp, sp = tmp_path / "t.npy", tmp_path / "s.npy"
    save_feature_maps(FeatureMapBatch(maps_t), tp)
    save_feature_maps(FeatureMapBatch(maps_s), sp)
    code, out, _ = run_cli(["loss", str(tp), str(sp), "--threads", "2"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["per_sample"]) == 3
    mean_v = sum(e["vertex"] for e in doc["per_sample"]) / 3
    assert abs(doc["mean"]["vertex"] - mean_v) < 1e-15


def test_check_schema_stable_under_degeneracy(tmp_path, rng, capsys):
    """The check JSON key set is fixed even when the spectral term is skipped."""
    t, s = valid_gradient_pair(rng, 4, 3, 3)
    degenerate = FeatureMap(np.repeat(rng.standard_normal((1, 3, 3)), 4, axis=0))
    tp, sp, dp = tmp_path / "t.npy", tmp_path / "s.npy", tmp_path / "d.npy"
    save_feature_maps(FeatureMapBatch((t,)), tp)
    save_feature_maps(FeatureMapBatch((s,)), sp)
    save_feature_maps(FeatureMapBatch((degenerate,)), dp)

    def keyset(doc):
        return (
            set(doc),
            {k: set(v) for k, v in doc["terms"].items()},
            set(doc["gradients"]),
        )

    _, out1, _ = run_cli(["check", str(tp), str(sp)], capsys)
    code, out2, _ = run_cli(["check", str(tp), str(dp)], capsys)
    doc1, doc2 = json.loads(out1), json.loads(out2)
    assert keyset(doc1) == keyset(doc2)
    assert doc2["terms"]["spectral"]["skipped"] is True
    assert doc2["gradients"]["spectral"] is None
    assert code == 0


def test_paper_documented_defaults(pair_paths, capsys):
    tp, sp = pair_paths
    _, out, _ = run_cli(["loss", tp, sp], capsys)
    echo = json.loads(out)["config_echo"]
    assert echo["alpha"] == echo["beta"] == echo["gamma"] == 1.0
    assert echo["n"] == 0.5
    assert echo["relation_softmax"] == "global"
    assert echo["eigen_selection"] == "largest"
    assert echo["spectral_variant"] == "vector"


def test_distill_sim_variant_and_option_paths(tmp_path, capsys):
    teacher = FeatureMap(4.0 * np.random.default_rng(14).standard_normal((4, 4, 4)))
    path = tmp_path / "t.npy"
    save_feature_maps(FeatureMapBatch((teacher,)), path)
    code, out, _ = run_cli(
        ["distill-sim", str(path), "--steps", "3", "--spectral-variant", "value"], capsys
    )
    assert code == 0
    doc = json.loads(out)
    assert len(doc["trajectory"]) == 4
    code, out, _ = run_cli(
        ["distill-sim", str(path), "--steps", "3", "--eigen", "smallest", "--relation-softmax", "row"],
        capsys,
    )
    assert code == 0


def test_byte_identical_reruns(tmp_path, rng):
    """Same inputs, same seed, --threads 1: byte-identical stdout."""
    t, s = valid_gradient_pair(rng, 4, 3, 3)
    tp, sp = tmp_path / "t.npy", tmp_path / "s.npy"
    save_feature_maps(FeatureMapBatch((t,)), tp)
    save_feature_maps(FeatureMapBatch((s,)), sp)
    cmd = [
        sys.executable, "-m", "crg_distill",
        "loss", str(tp), str(sp), "--seed", "3", "--threads", "1",
    ]
    r1 = subprocess.run(cmd, capture_output=True)
    r2 = subprocess.run(cmd, capture_output=True)
    assert r1.returncode == r2.returncode == 0
    assert r1.stdout == r2.stdout
