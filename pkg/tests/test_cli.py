"""End-to-end command-line behavior: configs, outputs, exit codes."""

import json

import pytest
import yaml

from wgtsim.cli import CSV_HEADER, SWEEP_CSV_HEADER, load_config, main, resolve


def write_config(path, **sections):
    cfg = {"schema": 1}
    cfg.update(sections)
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


def flagship_config(tmp_path, out_dir, K=200, **extra):
    return write_config(
        tmp_path / "run.yaml",
        graph={"preset": "sensor-6"},
        weights={"mode": "static"},
        objective={"seed": 2},
        algorithm={
            "mode": "wgt",
            "alpha": 0.1,
            "lambda": {"e": 0.8, "m": 10.0},
            "K": K,
            "init_seed": 3,
        },
        report={"output_dir": str(out_dir), "residual_threshold": 1.0e-6},
        **extra,
    )


def baseline_config(tmp_path, out_dir, alpha=5.0e-4, K=3000, **extra):
    return write_config(
        tmp_path / "run_ab.yaml",
        graph={"preset": "sensor-6"},
        objective={"seed": 2},
        algorithm={"mode": "ab", "alpha": alpha, "K": K, "init_seed": 3},
        report={"output_dir": str(out_dir)},
        **extra,
    )


def two_agent_config(tmp_path, out_dir, **extra):
    return write_config(
        tmp_path / "two.yaml",
        graph={"preset": "ring-2"},
        objective={"n": 2, "seed": 2},
        algorithm={
            "mode": "wgt",
            "alpha": [0.05, 0.08],
            "lambda": {"e": 0.8, "m": 10.0},
            "K": 200,
            "init_seed": 3,
        },
        report={"output_dir": str(out_dir)},
        **extra,
    )


class TestRun:
    def test_writes_csv_and_json(self, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = flagship_config(tmp_path, out)
        assert main(["run", cfg]) == 0
        csv_text = (out / "report.csv").read_text()
        lines = csv_text.strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + 201  # header + K+1 rows
        assert lines[1].startswith("1,1.0,")
        payload = json.loads((out / "report.json").read_text())
        assert payload["summary"]["iterations_to_threshold"] == 128
        assert payload["summary"]["converged"] is True
        assert payload["config"]["library"]["name"] == "wgtsim"
        assert payload["max_conservation_residual"] < 1e-9
        assert "iterations_to_threshold=128" in capsys.readouterr().out

    def test_single_iteration_run(self, tmp_path):
        out = tmp_path / "out"
        cfg = flagship_config(tmp_path, out, K=1)
        assert main(["run", cfg]) == 0
        lines = (out / "report.csv").read_text().strip().split("\n")
        assert len(lines) == 3  # header + initial row + one iteration

    def test_reports_are_byte_identical(self, tmp_path):
        cfg = flagship_config(tmp_path, tmp_path / "unused")
        assert main(["run", cfg, "-o", str(tmp_path / "a")]) == 0
        assert main(["run", cfg, "-o", str(tmp_path / "b")]) == 0
        assert (tmp_path / "a" / "report.csv").read_bytes() == (
            tmp_path / "b" / "report.csv"
        ).read_bytes()

    def test_divergent_run_exits_3(self, tmp_path, capsys):
        cfg = baseline_config(tmp_path, tmp_path / "out", alpha=0.01)
        assert main(["run", cfg]) == 3
        assert "divergence guard" in capsys.readouterr().err

    def test_threshold_override(self, tmp_path):
        out = tmp_path / "out"
        cfg = flagship_config(tmp_path, out)
        assert main(["run", cfg, "--threshold", "1e-3"]) == 0
        payload = json.loads((out / "report.json").read_text())
        assert payload["summary"]["residual_threshold"] == 1e-3
        assert payload["summary"]["iterations_to_threshold"] < 128

    def test_admissibility_section(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path / "adm.yaml",
            graph={"preset": "sensor-6"},
            objective={"seed": 2},
            algorithm={
                "mode": "wgt",
                "alpha": 1.0e-5,
                "lambda": {"e": 0.5, "m": 800.0},
                "K": 50,
                "init_seed": 3,
            },
            report={
                "output_dir": str(out),
                "admissibility": True,
                "admissibility_horizon": 200,
            },
        )
        assert main(["run", cfg]) == 0
        payload = json.loads((out / "report.json").read_text())
        adm = payload["admissibility"]
        assert adm["admissible"] is True
        assert adm["binding_term"] == "quadratic_margin"
        assert adm["window_first_k"] == 1

    def test_admissibility_skipped_for_baseline(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path / "ab_adm.yaml",
            graph={"preset": "sensor-6"},
            objective={"seed": 2},
            algorithm={"mode": "ab", "alpha": 5.0e-4, "K": 10, "init_seed": 3},
            report={"output_dir": str(out), "admissibility": True},
        )
        assert main(["run", cfg]) == 0
        payload = json.loads((out / "report.json").read_text())
        assert "skipped" in payload["admissibility"]


class TestValidate:
    def test_prints_resolved_config(self, tmp_path, capsys):
        cfg = flagship_config(tmp_path, tmp_path / "out")
        assert main(["validate", cfg]) == 0
        resolved = json.loads(capsys.readouterr().out)
        assert resolved["schema"] == 1
        assert resolved["algorithm"]["alpha"] == [0.1] * 6
        assert resolved["graph"]["n"] == 6
        assert "rng_family" in resolved["library"]

    def test_seed_overrides_land_in_resolved_config(self, tmp_path, capsys):
        cfg = flagship_config(tmp_path, tmp_path / "out")
        assert main([
            "validate", cfg,
            "--objective-seed", "9", "--init-seed", "8", "--weight-seed", "7",
        ]) == 0
        resolved = json.loads(capsys.readouterr().out)
        assert resolved["objective"]["seed"] == 9
        assert resolved["algorithm"]["init_seed"] == 8
        assert resolved["weights"]["seed"] == 7

    def test_custom_edge_list_graph(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path / "tri.yaml",
            graph={"n": 3, "edges": [[1, 2], [2, 3], [3, 1]]},
            objective={"n": 3, "seed": 0},
            algorithm={
                "mode": "wgt",
                "alpha": 0.01,
                "lambda": {"e": 0.8, "m": 10.0},
                "K": 5,
            },
        )
        assert main(["validate", cfg]) == 0
        resolved = json.loads(capsys.readouterr().out)
        assert resolved["graph"]["edges"] == [[1, 2], [2, 3], [3, 1]]


class TestConfigErrors:
    def run_expecting_2(self, tmp_path, capsys, **sections):
        cfg = write_config(tmp_path / "bad.yaml", **sections)
        assert main(["validate", cfg]) == 2
        assert "config error" in capsys.readouterr().err

    def test_unknown_top_level_key(self, tmp_path, capsys):
        self.run_expecting_2(
            tmp_path, capsys,
            graph={"preset": "sensor-6"},
            objective={"seed": 0},
            algorithm={"mode": "ab", "alpha": 1e-4, "K": 5},
            typo_section={},
        )

    def test_wrong_schema_version(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path / "bad.yaml",
            graph={"preset": "sensor-6"},
            objective={"seed": 0},
            algorithm={"mode": "ab", "alpha": 1e-4, "K": 5},
        )
        text = (tmp_path / "bad.yaml").read_text().replace("schema: 1", "schema: 2")
        (tmp_path / "bad.yaml").write_text(text)
        assert main(["validate", cfg]) == 2
        assert "schema" in capsys.readouterr().err

    def test_missing_required_sections(self, tmp_path, capsys):
        self.run_expecting_2(tmp_path, capsys, graph={"preset": "sensor-6"})

    def test_unknown_preset_and_preset_edge_conflict(self, tmp_path, capsys):
        self.run_expecting_2(
            tmp_path, capsys,
            graph={"preset": "torus-9"},
            objective={"seed": 0},
            algorithm={"mode": "ab", "alpha": 1e-4, "K": 5},
        )
        self.run_expecting_2(
            tmp_path, capsys,
            graph={"preset": "sensor-6", "n": 6},
            objective={"seed": 0},
            algorithm={"mode": "ab", "alpha": 1e-4, "K": 5},
        )

    def test_disconnected_graph(self, tmp_path, capsys):
        self.run_expecting_2(
            tmp_path, capsys,
            graph={"n": 3, "edges": [[1, 2], [2, 3]]},
            objective={"n": 3, "seed": 0},
            algorithm={"mode": "ab", "alpha": 1e-4, "K": 5},
        )

    def test_agent_count_mismatch(self, tmp_path, capsys):
        self.run_expecting_2(
            tmp_path, capsys,
            graph={"preset": "sensor-6"},
            objective={"n": 4, "seed": 0},
            algorithm={"mode": "ab", "alpha": 1e-4, "K": 5},
        )

    def test_bad_algorithm_values(self, tmp_path, capsys):
        base = dict(graph={"preset": "sensor-6"}, objective={"seed": 0})
        self.run_expecting_2(
            tmp_path, capsys, **base,
            algorithm={"mode": "push", "alpha": 1e-4, "K": 5},
        )
        self.run_expecting_2(
            tmp_path, capsys, **base,
            algorithm={"mode": "ab", "alpha": -0.1, "K": 5},
        )
        self.run_expecting_2(
            tmp_path, capsys, **base,
            algorithm={"mode": "ab", "alpha": [1e-4, 1e-4], "K": 5},
        )
        self.run_expecting_2(
            tmp_path, capsys, **base,
            algorithm={"mode": "wgt", "alpha": 0.1, "K": 5},  # no lambda
        )
        self.run_expecting_2(
            tmp_path, capsys, **base,
            algorithm={"mode": "wgt", "alpha": 0.1, "lambda": {"e": 0.0}, "K": 5},
        )
        self.run_expecting_2(
            tmp_path, capsys, **base,
            algorithm={"mode": "ab", "alpha": 1e-4, "K": 0},
        )

    def test_missing_file(self, capsys):
        assert main(["validate", "/nonexistent/nowhere.yaml"]) == 2
        assert "not found" in capsys.readouterr().err

    def test_load_config_requires_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        from wgtsim.errors import ConfigError

        with pytest.raises(ConfigError):
            load_config(path)


class TestAttack:
    def test_baseline_attack_conclusive(self, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = baseline_config(
            tmp_path, out,
            attack={"target": 1, "stabilization_tol": 1.0e-10, "window": 50},
        )
        assert main(["attack", cfg]) == 0
        payload = json.loads((out / "attack.json").read_text())
        att = payload["attack"]
        assert att["conclusive"] is True
        assert att["relative_error"] <= 1e-10
        assert att["mode"] == "ab"
        s = payload["audits"]["state_structural"]
        assert (s["equations"], s["unknowns"], s["nullity"]) == (18, 27, 9)
        g = payload["audits"]["gradient_structural"]
        assert (g["equations"], g["unknowns"], g["nullity"]) == (20, 38, 18)
        assert "two_agent" not in payload["audits"]
        assert "conclusive" in capsys.readouterr().out

    def test_target_flag_overrides_config(self, tmp_path):
        out = tmp_path / "out"
        cfg = baseline_config(
            tmp_path, out, attack={"target": 1},
        )
        assert main(["attack", cfg, "--target", "4"]) == 0
        payload = json.loads((out / "attack.json").read_text())
        assert payload["attack"]["target"] == 4

    def test_unstabilized_attack_exits_4(self, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = flagship_config(
            tmp_path, out, K=100,
            attack={"target": 1, "stabilization_tol": 1.0e-10, "window": 50},
        )
        assert main(["attack", cfg]) == 4
        payload = json.loads((out / "attack.json").read_text())
        assert payload["attack"]["conclusive"] is False
        assert "inconclusive" in capsys.readouterr().out

    def test_two_agent_attack_includes_numeric_audits(self, tmp_path):
        out = tmp_path / "out"
        cfg = two_agent_config(
            tmp_path, out, attack={"target": 1, "window": 50},
        )
        code = main(["attack", cfg])
        payload = json.loads((out / "attack.json").read_text())
        two = payload["audits"]["two_agent"]
        assert two["state"]["rank"] == 18
        assert two["state"]["nullity"] == 9
        assert two["state"]["consistency_residual"] <= 1e-12
        assert two["gradient"]["rank"] == 20
        assert two["gradient_consistency_residual"] <= 1e-12
        # Messages are still moving at K=200, so the eavesdropper's own
        # detector reports the attempt as not yet stabilized.
        assert code == 4


class TestAudit:
    def test_two_agent_numeric_audit(self, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = two_agent_config(
            tmp_path, out, audit={"K": 10, "honest": 1, "attacker": 2},
        )
        assert main(["audit", cfg]) == 0
        payload = json.loads((out / "audit.json").read_text())
        assert payload["state_structural"]["method"] == "structural"
        two = payload["two_agent"]
        assert two["K"] == 10
        assert two["state"]["method"] == "numeric"
        assert two["state"]["rank"] == 18
        assert two["gradient"]["rank"] == 20
        assert two["gradient"]["nullity"] == 18
        assert two["gradient_consistency_residual"] <= 1e-12
        assert "nullity" in capsys.readouterr().out

    def test_structural_only_for_larger_networks(self, tmp_path):
        out = tmp_path / "out"
        cfg = flagship_config(
            tmp_path, out, K=5, audit={"K": 3},
        )
        assert main(["audit", cfg]) == 0
        payload = json.loads((out / "audit.json").read_text())
        assert "two_agent" not in payload
        assert (
            payload["state_structural"]["equations"],
            payload["state_structural"]["unknowns"],
        ) == (4, 6)
        assert (
            payload["gradient_structural"]["equations"],
            payload["gradient_structural"]["unknowns"],
        ) == (6, 10)


class TestSweep:
    def sweep_config(self, tmp_path, out, **sweep):
        return write_config(
            tmp_path / "sweep.yaml",
            graph={"preset": "sensor-6"},
            objective={"seed": 2},
            algorithm={
                "mode": "wgt",
                "alpha": 0.02,
                "lambda": {"e": 0.8, "m": 10.0},
                "K": 100,
                "init_seed": 3,
            },
            report={"output_dir": str(out), "residual_threshold": 1.0e-6},
            sweep=sweep,
        )

    def test_grid_results_and_monotone_votes(self, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = self.sweep_config(
            tmp_path, out,
            K=3000,
            seeds=[0],
            alpha={"grid": [0.05, 0.1], "e": 0.8, "m": 100.0},
            e={"grid": [0.6, 0.8], "alpha": 0.02, "m": 10.0},
        )
        assert main(["sweep", cfg]) == 0
        lines = (out / "sweep.csv").read_text().strip().split("\n")
        assert lines[0] == SWEEP_CSV_HEADER
        assert len(lines) == 5  # header + 2 alpha cells + 2 e cells
        payload = json.loads((out / "sweep.json").read_text())
        cells = {(c["kind"], c["alpha"], c["e"]): c for c in payload["cells"]}
        assert cells[("alpha", 0.05, 0.8)]["iterations_to_threshold"] == 527
        assert cells[("alpha", 0.1, 0.8)]["iterations_to_threshold"] == 206
        assert cells[("e", 0.02, 0.6)]["iterations_to_threshold"] == 163
        assert cells[("e", 0.02, 0.8)]["iterations_to_threshold"] == 447
        assert payload["summary"]["alpha_monotone_votes"] == [True]
        assert payload["summary"]["alpha_monotone_majority"] is True
        assert payload["summary"]["e_monotone_votes"] == [True]
        assert payload["summary"]["e_monotone_majority"] is True
        assert "majority=True" in capsys.readouterr().out

    def test_censored_cells_cannot_fake_the_ordering(self, tmp_path):
        # A step size too small to converge within the budget is censored to
        # +inf iterations, which keeps a nonincreasing sequence valid.
        out = tmp_path / "out"
        cfg = self.sweep_config(
            tmp_path, out,
            K=500,
            seeds=[0],
            alpha={"grid": [1.0e-5, 0.1], "e": 0.8, "m": 100.0},
        )
        assert main(["sweep", cfg]) == 0
        payload = json.loads((out / "sweep.json").read_text())
        slow = next(c for c in payload["cells"] if c["alpha"] == 1.0e-5)
        fast = next(c for c in payload["cells"] if c["alpha"] == 0.1)
        assert slow["iterations_to_threshold"] is None
        assert fast["iterations_to_threshold"] is not None
        assert payload["summary"]["alpha_monotone_votes"] == [True]
        # The censored cell leaves its CSV fields empty rather than faking 0.
        lines = (out / "sweep.csv").read_text().strip().split("\n")
        censored = [l for l in lines[1:] if l.split(",")[1] == "1e-05"]
        assert censored and censored[0].endswith(",ok,,") is False
        assert censored[0].split(",")[7] == ""

    def test_empty_grid_rejected(self, tmp_path, capsys):
        cfg = self.sweep_config(tmp_path, tmp_path / "out", seeds=[0])
        assert main(["sweep", cfg]) == 2
        assert "empty grid" in capsys.readouterr().err

    def test_sweep_requires_weighted_mode(self, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path / "sweep_ab.yaml",
            graph={"preset": "sensor-6"},
            objective={"seed": 2},
            algorithm={"mode": "ab", "alpha": 5.0e-4, "K": 100},
            sweep={"alpha": {"grid": [0.05, 0.1]}},
        )
        assert main(["sweep", cfg]) == 2
        assert "wgt" in capsys.readouterr().err


class TestResolve:
    def test_defaults_fill_in(self, tmp_path):
        cfg = load_config(
            flagship_config(tmp_path, tmp_path / "out")
        )
        resolved = resolve(cfg)
        assert resolved["weights"]["a_floor"] == 0.1
        assert resolved["objective"]["d"] == 3
        assert resolved["objective"]["p"] == 2
        assert resolved["report"]["divergence_cap"] == 1e12
        assert resolved["algorithm"]["lambda"] == {"e": 0.8, "m": 10.0}

    def test_string_numbers_accepted(self, tmp_path):
        cfg = load_config(
            write_config(
                tmp_path / "s.yaml",
                graph={"preset": "sensor-6"},
                objective={"seed": 2},
                algorithm={
                    "mode": "wgt",
                    "alpha": "1e-2",
                    "lambda": {"e": "0.8", "m": "10"},
                    "K": 5,
                },
            )
        )
        resolved = resolve(cfg)
        assert resolved["algorithm"]["alpha"] == [0.01] * 6
        assert resolved["algorithm"]["lambda"]["e"] == 0.8
