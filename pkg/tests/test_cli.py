import json

from pvelab.cli import main, run_scenario


def write_cfg(path, **overrides):
    cfg = {
        "name": "case",
        "params": {"lambda_e": 1.0, "mu": 1.0, "alpha": 1.0, "c0": 0.1,
                   "kappa": 1.0, "delta1": 0.5},
        "mesh": {"dim": 1, "n": 32},
        "time": {"dt": 0.005, "T": 0.05, "theta": 0.5},
        "initial": {"p0": {"name": "cosine", "k": 1},
                    "u0": {"name": "sine", "k": 1, "amplitude": 0.3}},
        "sources": {},
        "outputs": {"which": ["trajectory", "ledger", "identities",
                              "spectrum"],
                    "identities": ["energyest"]},
        "seed": 3,
        "tolerances": {"identity": 0.01, "balance": 1e-8},
    }
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return cfg


def test_zero_scenario_all_zero(tmp_path):
    cfgp = tmp_path / "zero.json"
    write_cfg(cfgp, name="zero",
              initial={"p0": {"name": "zero"}, "u0": {"name": "zero"}},
              outputs={"which": ["trajectory", "ledger"]})
    assert run_scenario(cfgp, out_dir=str(tmp_path / "out")) == 0
    rows = (tmp_path / "out" / "trajectory.csv").read_text().splitlines()[1:]
    for row in rows:
        assert all(float(v) == 0.0 for v in row.split(",")[1:])


def test_strict_oracle_scenario_passes(tmp_path):
    cfgp = tmp_path / "oracle.json"
    write_cfg(cfgp)
    rc = run_scenario(cfgp, out_dir=str(tmp_path / "out"), strict=True)
    assert rc == 0
    ident = (tmp_path / "out" / "identities.csv").read_text().splitlines()
    assert ident[0] == "identity,t,residual,integrated,scale"
    rels = [abs(float(r.split(",")[3])) / float(r.split(",")[4])
            for r in ident[1:]]
    assert max(rels) < 0.01
    spec = json.loads((tmp_path / "out" / "spectrum.json").read_text())
    assert spec["spectral_abscissa"] < 0


def test_invalid_coefficient_identity_exits_2(tmp_path, capsys):
    cfgp = tmp_path / "bad.json"
    write_cfg(cfgp, params={"lambda_e": 1.0, "mu": 1.0, "alpha": 1.0,
                            "delta1": 0.5, "delta2": 0.4})
    assert run_scenario(cfgp) == 2
    assert "delta2 != alpha*delta1" in capsys.readouterr().err


def test_unknown_keys_rejected(tmp_path):
    cfgp = tmp_path / "unk.json"
    write_cfg(cfgp, frobnicate=1)
    assert run_scenario(cfgp) == 2


def test_determinism_and_manifest_roundtrip(tmp_path):
    cfgp = tmp_path / "case.json"
    write_cfg(cfgp)
    assert run_scenario(cfgp, out_dir=str(tmp_path / "a")) == 0
    assert run_scenario(cfgp, out_dir=str(tmp_path / "b")) == 0
    for f in ("trajectory.csv", "ledger.csv", "identities.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    # running from the manifest reproduces the outputs
    rc = run_scenario(tmp_path / "a" / "manifest.json",
                      out_dir=str(tmp_path / "c"))
    assert rc == 0
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == \
        (tmp_path / "c" / "trajectory.csv").read_bytes()
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["regime"]["kind"] == "ViscoStandardContent"
    assert len(man["content_hash"]) == 64


def test_strict_failure_exits_4(tmp_path):
    cfgp = tmp_path / "tight.json"
    write_cfg(cfgp, tolerances={"identity": 1e-16, "balance": 1e-30})
    rc = run_scenario(cfgp, out_dir=str(tmp_path / "out"), strict=True)
    assert rc == 4


def test_broadband_field_seeded(tmp_path):
    cfgp = tmp_path / "bb.json"
    write_cfg(cfgp, name="bb",
              params={"lambda_e": 1.0, "mu": 1.0, "alpha": 1.0, "c0": 1.0,
                      "kappa": 1.0},
              initial={"p0": {"name": "broadband", "kmax": 8, "decay": 0.5}},
              outputs={"which": ["trajectory"]}, seed=11)
    assert run_scenario(cfgp, out_dir=str(tmp_path / "o1")) == 0
    assert run_scenario(cfgp, out_dir=str(tmp_path / "o2")) == 0
    assert (tmp_path / "o1" / "trajectory.csv").read_bytes() == \
        (tmp_path / "o2" / "trajectory.csv").read_bytes()


def test_cli_main_batch(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    write_cfg(a, name="a", outputs={"which": ["ledger"],
                                    "directory": str(tmp_path / "ra")})
    write_cfg(b, name="b", outputs={"which": ["ledger"],
                                    "directory": str(tmp_path / "rb")})
    assert main(["run", str(a), str(b)]) == 0
    assert (tmp_path / "ra" / "ledger.csv").exists()
    assert (tmp_path / "rb" / "ledger.csv").exists()
    # parallel scenario execution writes to scenario-scoped directories
    write_cfg(a, name="a", outputs={"which": ["ledger"],
                                    "directory": str(tmp_path / "pa")})
    write_cfg(b, name="b", outputs={"which": ["ledger"],
                                    "directory": str(tmp_path / "pb")})
    assert main(["run", str(a), str(b), "--threads", "2"]) == 0
    assert (tmp_path / "pa" / "ledger.csv").read_bytes() == \
        (tmp_path / "ra" / "ledger.csv").read_bytes()


def test_full_fields_output(tmp_path):
    cfgp = tmp_path / "ff.json"
    write_cfg(cfgp, outputs={"which": ["trajectory"], "full_fields": True,
                             "store_every": 5})
    assert run_scenario(cfgp, out_dir=str(tmp_path / "out")) == 0
    header = (tmp_path / "out" / "trajectory.csv").read_text().splitlines()[0]
    assert header.endswith("p32")  # 33 pressure nodes on the n=32 mesh


def test_verify_quick_and_fault_injection(tmp_path):
    from pvelab.acceptance import verify_suite

    rep = verify_suite("quick")
    assert rep.passed
    payload = json.loads(rep.to_json())
    assert {c["id"] for c in payload["criteria"]} == {1, 2, 3, 8, 12}
    for c in payload["criteria"]:
        assert "measured" in c and "passed" in c

    broken = verify_suite("quick", fault="b_asymmetry")
    assert not broken.passed
    failed = [c.cid for c in broken.results if not c.passed]
    assert failed == [1]
