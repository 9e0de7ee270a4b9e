import json

import numpy as np
import pytest

from fixtures import build_fixture_examples, build_fixture_net
from warpcheck.cli import main
from warpcheck.images import write_image
from warpcheck.netfwd import save_weights


def read_summary(path):
    lines = path.read_text().splitlines()
    body_start = next(i for i, line in enumerate(lines) if not line.startswith("#"))
    return lines[:body_start], json.loads("\n".join(lines[body_start:]))


def trace_rows(path):
    rows = []
    header = None
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append(dict(zip(header, line.split(","))))
    return rows


class TestOptimize:
    def test_abs1d_converges(self, tmp_path, capsys):
        code = main([
            "optimize", "--fn", "abs1d", "--bounds", "0,1",
            "--depth", "6", "--alpha", "1", "--max-iters", "50",
            "--out", str(tmp_path),
        ])
        assert code == 0
        rows = trace_rows(tmp_path / "trace.csv")
        assert float(rows[-1]["l_min"]) <= 3.0**-6
        header, payload = read_summary(tmp_path / "summary.txt")
        assert header[0] == "# warpcheck-output v1"
        assert payload["function"] == "abs1d"

    def test_missing_bounds_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            main(["optimize", "--fn", "abs1d", "--out", str(tmp_path)])
        assert info.value.code == 2

    def test_unknown_function_fails_cleanly(self, tmp_path, capsys):
        code = main(["optimize", "--fn", "nope", "--bounds", "0,1", "--out", str(tmp_path)])
        assert code == 1
        assert "nope" in capsys.readouterr().err

    def test_dimension_mismatch_rejected(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["optimize", "--fn", "abs1d", "--bounds", "0,1,0,1", "--out", str(tmp_path)])

    def test_deterministic_trace_bytes(self, tmp_path):
        args = [
            "optimize", "--fn", "multi-basin", "--bounds", "0,1,0,1",
            "--max-iters", "20", "--out", str(tmp_path),
        ]
        main(args)
        first = (tmp_path / "trace.csv").read_bytes()
        main(args)
        assert (tmp_path / "trace.csv").read_bytes() == first

    def test_alpha_raises_query_count(self, tmp_path):
        # wider candidate sets spend more queries in the same iterations
        queries = {}
        for alpha in ("1", "3"):
            out = tmp_path / f"alpha{alpha}"
            main([
                "optimize", "--fn", "multi-basin", "--bounds", "0,1,0,1",
                "--alpha", alpha, "--depth", "7", "--max-iters", "15",
                "--max-queries", "100000", "--out", str(out),
            ])
            queries[alpha] = int(trace_rows(out / "trace.csv")[-1]["queries"])
        assert queries["3"] > queries["1"]

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "[function]\nname = abs1d\nbounds = 0,1\n"
            "[search]\ndepth = 4\nalpha = 1\nmax_iters = 9\n"
            f"[output]\ndir = {tmp_path / 'from_file'}\n"
        )
        code = main(["optimize", "--config", str(cfg), "--depth", "5"])
        assert code == 0
        header, _ = read_summary(tmp_path / "from_file" / "summary.txt")
        assert "# search.depth = 5" in header  # flag wins
        assert "# search.max_iters = 9" in header  # file value used

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["optimize", "--config", str(tmp_path / "none.cfg")])


@pytest.fixture(scope="module")
def model_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("fixture")
    save_weights(path / "net.txt", build_fixture_net())
    examples = build_fixture_examples(count=6, seed=11)
    names = []
    labels = []
    for i, (img, label) in enumerate(examples):
        name = path / f"ex{i}.txt"
        write_image(name, img)
        names.append(str(name))
        labels.append(str(label))
    (path / "labels.txt").write_text("\n".join(labels) + "\n")
    return path, names


class TestVerify:
    def test_verdict_rows_and_aggregate(self, model_dir, tmp_path):
        path, names = model_dir
        code = main([
            "verify", "--weights", str(path / "net.txt"),
            "--images", *names, "--labels", str(path / "labels.txt"),
            "--rotation", "20", "--scale", "0.1", "--translate", "1.6,1.6",
            "--depth", "5", "--alpha", "2", "--max-iters", "25",
            "--max-queries", "1200", "--out", str(tmp_path),
        ])
        assert code == 0
        rows = (tmp_path / "results.csv").read_text().splitlines()
        data = [r for r in rows if not r.startswith("#")]
        assert data[0].startswith("index,image,label,verdict")
        assert len(data) == 1 + len(names)
        _, payload = read_summary(tmp_path / "summary.txt")
        assert payload["examples"] == len(names)
        total = (payload["verified"] + payload["falsified"]
                 + payload["undecided"] + payload["clean_error"])
        assert total == len(names)

    def test_degenerate_rotation_dim_excluded(self, model_dir, tmp_path):
        path, names = model_dir
        code = main([
            "verify", "--weights", str(path / "net.txt"),
            "--images", names[0], "--labels", "0",
            "--rotation", "0", "--scale", "0.1",
            "--max-iters", "10", "--out", str(tmp_path),
        ])
        assert code == 0
        rows = (tmp_path / "results.csv").read_text().splitlines()
        data = [r for r in rows if not r.startswith("#")][1]
        # a witness, if any, would live in the single remaining dimension
        assert data.split(",")[3] in ("verified-estimate", "falsified", "undecided")

    def test_skip_misclassified(self, model_dir, tmp_path):
        path, names = model_dir
        # wrong label on purpose: clean margin goes negative
        code = main([
            "verify", "--weights", str(path / "net.txt"),
            "--images", names[0], "--labels", "1",
            "--rotation", "20", "--scale", "0.1", "--skip-misclassified",
            "--max-iters", "10", "--out", str(tmp_path),
        ])
        assert code == 0
        rows = (tmp_path / "results.csv").read_text().splitlines()
        data = [r for r in rows if not r.startswith("#")][1]
        assert data.split(",")[3] == "clean-error"
        _, payload = read_summary(tmp_path / "summary.txt")
        assert payload["clean_error"] == 1

    def test_unreadable_weights(self, tmp_path, capsys):
        code = main([
            "verify", "--weights", str(tmp_path / "missing.txt"),
            "--images", "x.txt", "--labels", "0", "--rotation", "10",
            "--out", str(tmp_path),
        ])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_label_count_mismatch(self, model_dir, tmp_path):
        path, names = model_dir
        with pytest.raises(SystemExit):
            main([
                "verify", "--weights", str(path / "net.txt"),
                "--images", *names, "--labels", "0,1",
                "--rotation", "10", "--out", str(tmp_path),
            ])


class TestCompare:
    def test_label_file_length_must_match_images(self, model_dir, tmp_path):
        path, names = model_dir
        # labels file has six entries but only four images are given
        with pytest.raises(SystemExit) as info:
            main([
                "compare", "--weights", str(path / "net.txt"),
                "--images", *names[:4], "--labels", str(path / "labels.txt"),
                "--rotation", "20", "--scale", "0.1",
                "--out", str(tmp_path),
            ])
        assert info.value.code == 2

    def test_table_contents(self, model_dir, tmp_path):
        path, names = model_dir
        code = main([
            "compare", "--weights", str(path / "net.txt"),
            "--images", *names, "--labels", str(path / "labels.txt"),
            "--rotation", "20", "--scale", "0.1", "--translate", "1.6,1.6",
            "--depth", "5", "--max-iters", "20", "--max-queries", "1000",
            "--oracle-grid", "5", "--oracle-random", "300",
            "--seed", "1", "--out", str(tmp_path),
        ])
        assert code == 0
        rows = [r for r in (tmp_path / "compare.csv").read_text().splitlines()
                if not r.startswith("#")]
        assert rows[0] == "method,verified_acc,mean_queries,mean_runtime_s,match_rate"
        methods = [r.split(",")[0] for r in rows[1:]]
        assert methods == ["warpcheck", "grid", "random"]
        grid_row = rows[2].split(",")
        assert float(grid_row[4]) == 1.0  # grid always matches itself
        _, payload = read_summary(tmp_path / "summary.txt")
        assert payload["attacked"] == len(names)

    def test_methods_agree_on_one_dim_rotation(self, tmp_path):
        # single-factor search: all three methods settle the same verdicts
        from warpcheck.baselines import grid_search
        from warpcheck.netfwd import forward
        from warpcheck.objectives import MarginObjective, TransformDomain

        net = build_fixture_net()
        model = lambda batch: forward(net, batch)
        domain = TransformDomain.from_ranges(rotation=20.0)
        space = domain.param_space()
        names, labels = [], []
        save_weights(tmp_path / "net.txt", net)
        picked = 0
        for i, (img, label) in enumerate(build_fixture_examples(count=24, seed=13)):
            objective = MarginObjective(model, img, label, domain)
            worst = grid_search(objective, space, 41).min_value
            if abs(worst) < 0.08 or objective.clean_margin <= 0.08:
                continue
            name = tmp_path / f"rot{i}.txt"
            write_image(name, img)
            names.append(str(name))
            labels.append(str(label))
            picked += 1
            if picked == 5:
                break
        assert picked == 5
        code = main([
            "compare", "--weights", str(tmp_path / "net.txt"),
            "--images", *names, "--labels", ",".join(labels),
            "--rotation", "20", "--depth", "6", "--max-iters", "40",
            "--max-queries", "2000", "--oracle-grid", "41",
            "--oracle-random", "500", "--seed", "0",
            "--out", str(tmp_path / "cmp"),
        ])
        assert code == 0
        rows = [r for r in (tmp_path / "cmp" / "details.csv").read_text().splitlines()
                if not r.startswith("#")][1:]
        survived = {}
        for row in rows:
            idx, method, min_value = row.split(",")[:3]
            survived.setdefault(method, {})[idx] = float(min_value) > 0.0
        assert survived["warpcheck"] == survived["grid"] == survived["random"]

    def test_empty_image_list(self, model_dir, tmp_path):
        path, _ = model_dir
        code = main([
            "compare", "--weights", str(path / "net.txt"),
            "--images", "--rotation", "10",
            "--out", str(tmp_path),
        ])
        assert code == 0
        rows = [r for r in (tmp_path / "compare.csv").read_text().splitlines()
                if not r.startswith("#")]
        assert rows == ["method,verified_acc,mean_queries,mean_runtime_s,match_rate"]
