import json
import subprocess
import sys

import pytest

from fixtures import F_COUNTER, I_BLOCK, I_CONFLICT, I_SOUL, SWAP2
from stablefrac.cli import run


def write(tmp_path, name, payload):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_soul(tmp_path, capsys):
    code, out, _ = call(capsys, "classify", write(tmp_path, "i.json", I_SOUL.to_json()))
    assert code == 0 and json.loads(out)["cmfp"] is True


def test_verify_block_swap(tmp_path, capsys):
    inst = write(tmp_path, "i.json", I_BLOCK.to_json())
    mu = write(tmp_path, "m.json", {"pairs": SWAP2.to_json()})
    code, out, _ = call(capsys, "verify", inst, mu)
    assert code == 1 and json.loads(out)["blocking"] == [[0, 0]]


def test_solve_conflict_half_half(tmp_path, capsys):
    code, out, _ = call(capsys, "solve", write(tmp_path, "i.json", I_CONFLICT.to_json()), "--mechanism", "envy-frac")
    assert code == 0 and json.loads(out)["matching"] == [["1/2", "1/2"], ["1/2", "1/2"]]


def test_solve_trace_and_decompose(tmp_path, capsys):
    inst = write(tmp_path, "i.json", I_CONFLICT.to_json())
    code, out, _ = call(capsys, "solve", inst, "--trace")
    assert code == 0 and json.loads(out)["trace"]["branch"] == "cycle"
    sol = write(tmp_path, "s.json", json.loads(out))
    code, out, _ = call(capsys, "decompose", sol)
    assert code == 0 and [c["weight"] for c in json.loads(out)] == ["1/2", "1/2"]


def test_solve_anomaly_emits_fallback(tmp_path, capsys):
    code, out, err = call(capsys, "solve", write(tmp_path, "i.json", F_COUNTER.to_json()))
    assert code == 3 and "anomaly" in err
    data = json.loads(out)
    assert data["fallback"] == "integral" and data["matching"][0] == ["0", "0", "1"]


def test_envy_graph_outputs(tmp_path, capsys):
    inst = write(tmp_path, "i.json", I_CONFLICT.to_json())
    mu = write(tmp_path, "m.json", [[1, 0], [0, 1]])
    code, out, _ = call(capsys, "envy-graph", inst, mu, "--side", "women")
    assert code == 0 and json.loads(out)["adjacency"] == {"w0": ["w1"], "w1": ["w0"]}
    code, out, _ = call(capsys, "envy-graph", inst, mu, "--side", "women", "--dot")
    assert out.startswith("digraph") and "w0 -> w1;" in out


def test_audit_exit_codes(tmp_path, capsys):
    from fixtures import F_MANIP

    code, out, _ = call(capsys, "audit-ic", write(tmp_path, "s.json", I_SOUL.to_json()), "--coalition", "m0,w1")
    assert code == 0 and json.loads(out)["verdict"] == "no-gain-found"
    code, out, _ = call(capsys, "audit-ic", write(tmp_path, "t.json", F_MANIP.to_json()),
                        "--mechanism", "gs-men", "--family", "combined")
    assert code == 1 and json.loads(out)["verdict"] == "manipulation-found"


@pytest.mark.parametrize(
    "argv",
    [["classify", "/nonexistent.json"], ["bogus"], ["gen", "--n", "0"], ["audit-ic", "-", "--coalition", "x9"]],
)
def test_input_errors(argv, capsys, monkeypatch, tmp_path):
    import io

    monkeypatch.setattr(sys, "stdin", io.StringIO(json.dumps(I_SOUL.to_json())))
    code, _, err = call(capsys, *argv)
    assert code == 2


def test_invalid_instance_is_input_error(tmp_path, capsys):
    bad = write(tmp_path, "b.json", {"n": 2, "U": [[1, 1], [1, 2]], "V": [[2, 1], [1, 2]]})
    assert call(capsys, "classify", bad)[0] == 2


def test_gen_deterministic(capsys):
    a = call(capsys, "gen", "--n", "4", "--seed", "3", "--mode", "no-mfp")[1]
    b = call(capsys, "gen", "--n", "4", "--seed", "3", "--mode", "no-mfp")[1]
    assert a == b and json.loads(a)["n"] == 4


@pytest.mark.parametrize("mode", ["uniform", "no-mfp", "cmfp"])
def test_pipeline_gen_solve_verify(mode):
    def stage(args, stdin=None):
        return subprocess.run([sys.executable, "-m", "stablefrac.cli", *args], input=stdin,
                              capture_output=True, text=True, check=False)

    for seed in range(3):
        g = stage(["gen", "--n", "5", "--seed", str(seed), "--mode", mode])
        s = stage(["solve", "-", "--mechanism", "envy-frac"], g.stdout)
        v = stage(["verify", "-"], s.stdout)
        assert g.returncode == 0 and s.returncode in (0, 3)
        assert v.returncode == 0, v.stdout + v.stderr
