import json

import pytest

from gadsp.builder import build_instance
from gadsp.cli import main
from gadsp.gensamples import random_orbit_tuple, rng_from_seed
from gadsp.serialize import (
    dumps,
    parse_spectral,
    spectral_to_document,
    tuple_to_document,
)


def fuchsian_doc(resonant):
    infinity_values = ["-1/4", "-1/2"] if resonant else ["-1/3", "-1/5"]
    finite = [["0", "1/4"], ["0", "1/2"]] if resonant \
        else [["0", "1/4"], ["0", "17/60"]]
    poles = [{"point": "infinity", "order": 1, "blocks": [
        {"size": 2, "q": [], "residue": {"jordan": [
            {"value": infinity_values[0], "blocks": [1]},
            {"value": infinity_values[1], "blocks": [1]}]}}]}]
    for i, values in enumerate(finite, start=1):
        poles.append({"point": "a%d" % i, "order": 1, "blocks": [
            {"size": 2, "q": [], "residue": {"jordan": [
                {"value": values[0], "blocks": [1]},
                {"value": values[1], "blocks": [1]}]}}]})
    return {"rank": 2, "poles": poles}


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def test_quiver_command_json_and_dot(tmp_path, capsys):
    path = write(tmp_path, "inst.json", fuchsian_doc(resonant=False))
    assert main(["quiver", path]) == 0
    report = json.loads(capsys.readouterr().out)
    assert len(report["vertices"]) == 4
    assert report["alpha_dot_lambda"] == "0"
    assert main(["quiver", path, "--format", "dot"]) == 0
    dot = capsys.readouterr().out
    assert dot.startswith("digraph quiver {")
    assert dot.count("->") == 3


def test_check_exit_codes_and_certificates(tmp_path, capsys):
    good = write(tmp_path, "good.json", fuchsian_doc(resonant=False))
    bad = write(tmp_path, "bad.json", fuchsian_doc(resonant=True))
    assert main(["check", good]) == 0
    out_good = json.loads(capsys.readouterr().out)
    assert out_good["solvable"] and out_good["moduli_nonempty"]
    assert main(["check", bad]) == 1
    out_bad = json.loads(capsys.readouterr().out)
    assert not out_bad["solvable"]
    assert out_bad["certificate"]["kind"] == "violating_decomposition"


def test_check_deterministic_output(tmp_path, capsys):
    path = write(tmp_path, "inst.json", fuchsian_doc(resonant=True))
    main(["check", path])
    first = capsys.readouterr().out
    main(["check", path])
    second = capsys.readouterr().out
    assert first == second


def test_malformed_input_exits_two(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    assert main(["check", str(path)]) == 2
    missing_residue = {"rank": 1, "poles": [
        {"point": "infinity", "order": 1, "blocks": [{"size": 1, "q": []}]}]}
    path2 = write(tmp_path, "norres.json", missing_residue)
    assert main(["check", path2]) == 2


def test_tiny_cap_exits_three(tmp_path, capsys):
    path = write(tmp_path, "inst.json", fuchsian_doc(resonant=True))
    assert main(["check", path, "--max-nodes", "1"]) == 3


def test_verify_and_mc_roundtrip(tmp_path, capsys):
    rng = rng_from_seed(99)
    data, t = random_orbit_tuple(rng, n=2, p=1)
    inst_path = write(tmp_path, "inst.json", spectral_to_document(data))
    tup_path = write(tmp_path, "tuple.json", tuple_to_document(t, data))
    code = main(["verify", inst_path, tup_path])
    report = json.loads(capsys.readouterr().out)
    assert report["checks"]["residue_sum_zero"]
    assert report["checks"]["moment_map_equals_lambda"]
    assert "irreducible" in report
    assert report["ok"] and code == 0

    # find a multi-index with nonzero leading-xi sum
    inst = build_instance(data)
    from gadsp.numeric import ZERO
    chosen = None
    for mi in inst.multi_indices():
        acc = ZERO
        for i in range(inst.num_poles):
            acc = acc + data.block(i, mi[i]).xi[0]
        if acc:
            chosen = mi
            break
    if chosen is None:
        pytest.skip("all leading-xi sums vanish for this sample")
    code = main(["mc", inst_path, tup_path,
                 "--index", ",".join(str(j) for j in chosen)])
    report = json.loads(capsys.readouterr().out)
    assert code == 0
    assert all(report["orbit_checks"])
    assert report["rank_out"] == report["dim_w"] - report["rank_in"]


def test_verify_detects_residue_sum_violation(tmp_path, capsys):
    rng = rng_from_seed(100)
    data, t = random_orbit_tuple(rng, n=2, p=1)
    doc = tuple_to_document(t, data)
    doc["poles"][0]["matrices"][0][0][0] = "77"
    inst_path = write(tmp_path, "inst.json", spectral_to_document(data))
    tup_path = write(tmp_path, "tuple.json", doc)
    assert main(["verify", inst_path, tup_path]) == 2
    report = json.loads(capsys.readouterr().out)
    assert not report["checks"]["residue_sum_zero"]


def test_mc_zero_xi_exits_two(tmp_path, capsys):
    # craft an instance whose only multi-index has leading-xi sum zero
    doc = {"rank": 1, "poles": [
        {"point": "infinity", "order": 1, "blocks": [
            {"size": 1, "q": [], "residue": {"jordan": [
                {"value": "1", "blocks": [1]}]}}]},
        {"point": "a1", "order": 1, "blocks": [
            {"size": 1, "q": [], "residue": {"jordan": [
                {"value": "-1", "blocks": [1]}]}}]}]}
    data = parse_spectral(doc)
    from gadsp.matrixops import tuple_from_data
    t = tuple_from_data(data)
    inst_path = write(tmp_path, "inst.json", doc)
    tup_path = write(tmp_path, "tuple.json", tuple_to_document(t, data))
    assert main(["mc", inst_path, tup_path, "--index", "1,1"]) == 2


def test_selftest_runs_clean(capsys):
    assert main(["selftest", "--seed", "1", "--trials", "2"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["ok"]


def test_roundtrip_documents():
    rng = rng_from_seed(101)
    data, t = random_orbit_tuple(rng, n=2, p=1)
    doc = spectral_to_document(data)
    again = parse_spectral(doc)
    assert again == data
    from gadsp.serialize import parse_tuple
    t2 = parse_tuple(tuple_to_document(t, data), data)
    assert t2 == t
