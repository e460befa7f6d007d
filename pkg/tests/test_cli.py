import filecmp
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from sleeptda import cli, plotting
from sleeptda.cohort import StudyRecord, write_study
from sleeptda.config import PipelineConfig
from sleeptda.dsp import MultichannelSignal
from sleeptda.landscape import landscape_from_diagram, make_grid
from sleeptda.persistence import PersistenceDiagram
from sleeptda.pipeline import Archive, RecordKey

SVG = "{http://www.w3.org/2000/svg}"


def run(*args):
    return cli.main([str(a) for a in args])


def make_study(path, seconds=90, stages=("NREM1", "NREM2", "REM"), events=(), sid="s1", seed=0):
    x = np.random.default_rng(seed).standard_normal((7, seconds * 256))
    sig = MultichannelSignal(x, 256, tuple(f"EEG{i}" for i in range(7)))
    ann = [((30.0 * i, 30.0), s) for i, s in enumerate(stages)]
    return write_study(StudyRecord(sid, sig, ann, [((1.0, 5.0), e) for e in events]), path / sid)


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    cfg = root / "cfg.ini"
    PipelineConfig(permutations=50).save(cfg)
    assert run("simulate", "--output", root / "studies", "--n-per-group", 3, "--duration", 120,
               "--seed", 5) == 0
    manifests = (root / "studies" / "manifests.txt").read_text().split()
    assert run("preprocess", "--config", cfg, "--output", root / "m", *manifests) == 0
    assert run("persist", "--output", root / "d", root / "m") == 0
    assert run("landscape", "--config", cfg, "--output", root / "l", root / "d") == 0
    assert run("test", "--config", cfg, "--output", root / "t", root / "l") == 0
    return root, cfg


# ------------------------------------------------------------------- stages

def test_preprocess_counts(tmp_path, capsys):
    m = make_study(tmp_path)
    assert run("preprocess", "--output", tmp_path / "out", m) == 0
    arc = Archive.open(tmp_path / "out")
    assert arc.kind == "matrices" and len(arc) == 15
    out = capsys.readouterr().out
    assert "15 matrices from 1 studies" in out
    assert len({e.key[:3] for e in arc.entries}) == 15
    d = arc.load(arc.find("s1:2:Gamma"))
    assert d.shape == (7, 7) and np.array_equal(d, d.T) and np.all(np.diag(d) == 0)
    assert arc.find("s1:2:Gamma").key.stage == "REM"


def test_preprocess_empty_input_is_usage_error(tmp_path, capsys):
    assert run("preprocess", "--output", tmp_path) == cli.EXIT_USAGE
    assert "manifest" in capsys.readouterr().err


def test_preprocess_only_awake(tmp_path, capsys):
    m = make_study(tmp_path, stages=("Awake", "Awake", "Awake"))
    assert run("preprocess", "--output", tmp_path / "out", m) == 0
    assert len(Archive.open(tmp_path / "out")) == 0
    assert "warning" in capsys.readouterr().err


def test_preprocess_errors_carry_context(tmp_path, capsys):
    m = make_study(tmp_path)
    (m.parent / "ch03.f32").write_bytes(b"\0" * 400)
    assert run("preprocess", "--output", tmp_path / "out", m) == cli.EXIT_VALIDATION
    err = capsys.readouterr().err
    assert str(m) in err and "EEG3" in err
    assert run("preprocess", "--output", tmp_path / "o2", tmp_path / "missing.json") == cli.EXIT_IO


def test_listfile_argument(tmp_path):
    m = make_study(tmp_path)
    (tmp_path / "list.txt").write_text(f"{m}\n")
    assert run("preprocess", "--output", tmp_path / "out", f"@{tmp_path / 'list.txt'}") == 0


def test_persist_and_landscape_preserve_keys(small_run):
    root, _ = small_run
    m, d, l = (Archive.open(root / k) for k in "mdl")
    assert len(m) == len(d) == len(l) == 6 * 4 * 5
    assert [e.key for e in m.entries] == [e.key for e in d.entries] == [e.key for e in l.entries]
    for e in d.entries[:10]:
        dgm = d.load(e)
        assert len(dgm.finite(0)) == 6 and dgm.essential(0) == 1
    for e in l.entries:
        ls = l.load(e)
        assert ls.levels.shape == (6, 256)
        assert np.all(ls.levels[:, ls.grid > 1.0] == 0)


def test_ptable_shape(small_run):
    root, _ = small_run
    lines = (root / "t" / "ptable.csv").read_text().splitlines()
    assert lines[0] == "band,NREM1,NREM2,NREM3,REM"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["Delta", "Theta", "Alpha", "Beta", "Gamma"]
    for ln in lines[1:]:
        for v in ln.split(",")[1:]:
            assert len(v.split(".")[1]) == 3


def test_b_one_smoke(small_run, tmp_path, capsys):
    root, cfg = small_run
    assert run("test", "--config", cfg, "-B", 1, root / "l") == 0
    vals = [v for ln in capsys.readouterr().out.splitlines()[1:] for v in ln.split(",")[1:]]
    assert set(vals) <= {"0.000", "1.000"}


def test_single_group_is_invalid(tmp_path):
    m = make_study(tmp_path, events=("Obstructive Apnea",))
    assert run("preprocess", "--output", tmp_path / "m", m) == 0
    assert run("persist", "--output", tmp_path / "d", tmp_path / "m") == 0
    assert run("landscape", "--output", tmp_path / "l", tmp_path / "d") == 0
    assert run("test", "-B", 10, tmp_path / "l") == cli.EXIT_VALIDATION


def test_corrupt_record_is_named(small_run, tmp_path, capsys):
    import shutil
    root, _ = small_run
    shutil.copytree(root / "m", tmp_path / "m")
    arc = Archive.open(tmp_path / "m")
    victim = arc.entries[3]
    (tmp_path / "m" / victim.path).write_text("7\n1 2 3\n")
    assert run("persist", "--output", tmp_path / "d", tmp_path / "m") == cli.EXIT_VALIDATION
    assert str(victim.key) in capsys.readouterr().err


def test_wrong_archive_kind(small_run, tmp_path):
    root, _ = small_run
    assert run("landscape", "--output", tmp_path / "x", root / "m") == cli.EXIT_VALIDATION
    assert run("persist", "--output", tmp_path / "x", tmp_path / "nothing") == cli.EXIT_IO


def test_duplicate_keys_rejected(tmp_path):
    from sleeptda.errors import ArchiveError
    arc = Archive.create(tmp_path, "matrices")
    arc.add(RecordKey("a", 0, "Delta", "REM"), "Apnea", "1\n0.0\n")
    arc.add(RecordKey("a", 0, "Delta", "REM"), "Apnea", "1\n0.0\n")
    with pytest.raises(ArchiveError):
        arc.save()
    with pytest.raises(ArchiveError):
        arc.add(RecordKey("../x", 0, "Delta", "REM"), "Apnea", "")


# ------------------------------------------------------------- determinism

def test_determinism_byte_identical(small_run, tmp_path):
    root, cfg = small_run
    manifests = (root / "studies" / "manifests.txt").read_text().split()
    assert run("preprocess", "--config", cfg, "--jobs", 4, "--output", tmp_path / "m", *manifests) == 0
    assert run("persist", "--jobs", 3, "--output", tmp_path / "d", tmp_path / "m") == 0
    assert run("landscape", "--config", cfg, "--output", tmp_path / "l", tmp_path / "d") == 0
    assert run("test", "--config", cfg, "--jobs", 2, "--output", tmp_path / "t", tmp_path / "l") == 0
    for sub in "mdl":
        cmp = filecmp.dircmp(root / sub, tmp_path / sub)
        assert (root / sub / "index.tsv").read_bytes() == (tmp_path / sub / "index.tsv").read_bytes()
        for e in Archive.open(root / sub).entries:
            assert (root / sub / e.path).read_bytes() == (tmp_path / sub / e.path).read_bytes()
        assert not cmp.left_only and not cmp.right_only
    for name in ("ptable.csv", "ptable_details.tsv"):
        assert (root / "t" / name).read_bytes() == (tmp_path / "t" / name).read_bytes()


def test_seed_flag_changes_only_the_test(small_run, capsys):
    root, cfg = small_run
    run("test", "--config", cfg, "--seed", 1, root / "l")
    a = capsys.readouterr().out
    run("test", "--config", cfg, "--seed", 1, root / "l")
    assert capsys.readouterr().out == a


def test_simulate_reproducible(tmp_path):
    for sub in ("a", "b"):
        assert run("simulate", "--seed", 9, "--n-per-group", 1, "--duration", 30,
                   "--output", tmp_path / sub) == 0
    for sid in ("syn-apnea-000", "syn-control-000"):
        for f in ("ch00.f32", "ch06.f32", "annotations.csv"):
            assert (tmp_path / "a" / sid / f).read_bytes() == (tmp_path / "b" / sid / f).read_bytes()


# --------------------------------------------------------------------- plot

def _parse(path):
    return ET.parse(path).getroot()


def test_plot_diagram_points(tmp_path):
    svg = plotting.diagram_svg(PersistenceDiagram.from_bars([(0, 0, 0.4), (0, 0, 0.7)]))
    (tmp_path / "a.svg").write_text(svg)
    root = _parse(tmp_path / "a.svg")
    circles = root.findall(f".//{SVG}circle")
    assert len(circles) == 2
    # above the diagonal: SVG y grows downward, so cy < the diagonal's y at cx
    diag = [l for l in root.iter(f"{SVG}line") if l.get("class") == "diagonal"][0]
    x1, y1, x2, y2 = (float(diag.get(k)) for k in ("x1", "y1", "x2", "y2"))
    for c in circles:
        cx, cy = float(c.get("cx")), float(c.get("cy"))
        assert cy < y1 + (y2 - y1) * (cx - x1) / (x2 - x1)


def test_plot_empty_diagram():
    root = ET.fromstring(plotting.diagram_svg(PersistenceDiagram.empty()))
    assert not root.findall(f".//{SVG}circle") and not root.findall(f".//{SVG}path")
    assert [l.get("class") for l in root.iter(f"{SVG}line")].count("diagonal") == 1
    assert root.find(f".//{SVG}g[@class='axes']") is not None


def test_plot_landscape_levels():
    ls = landscape_from_diagram(PersistenceDiagram.from_bars([(0, 0, 0.5), (0, 0.1, 0.4)]), 0,
                                make_grid(0, 0.01, 60), k=2)
    root = ET.fromstring(plotting.landscape_svg(ls))
    assert len(root.findall(f".//{SVG}polyline")) == 2


def test_plot_command(small_run, tmp_path, capsys):
    root, _ = small_run
    key = "syn-apnea-000:1:Delta"
    assert run("plot", "--key", key, "--output", tmp_path / "d.svg", root / "d") == 0
    dsvg = _parse(tmp_path / "d.svg")
    assert len(dsvg.findall(f".//{SVG}circle")) == 6
    assert len(dsvg.findall(f".//{SVG}path[@class='essential']")) == 1
    assert run("plot", "--key", key, "--output", tmp_path / "l.svg", root / "l") == 0
    assert len(_parse(tmp_path / "l.svg").findall(f".//{SVG}polyline")) == 6
    assert run("plot", "--key", "nobody:0:Delta", "--output", tmp_path / "x.svg",
               root / "d") == cli.EXIT_VALIDATION
    assert "nobody:0:Delta" in capsys.readouterr().err


# ------------------------------------------------------------------- misc

def test_usage_errors(capsys):
    assert run() == cli.EXIT_USAGE
    assert run("frobnicate") == cli.EXIT_USAGE
    assert run("persist") == cli.EXIT_USAGE
    assert run("persist", "somewhere") == cli.EXIT_USAGE  # no --output


def test_config_command(tmp_path, capsys):
    assert run("config", "--seed", 17, "--output", tmp_path / "c.ini") == 0
    assert PipelineConfig.from_file(tmp_path / "c.ini") == PipelineConfig(seed=17)
    (tmp_path / "bad.ini").write_text("[pipeline]\nwhat = 1\n")
    assert run("config", "--config", tmp_path / "bad.ini") == cli.EXIT_VALIDATION


def test_global_flags_before_subcommand(tmp_path):
    assert run("--seed", 3, "--output", tmp_path / "c.ini", "config") == 0
    assert PipelineConfig.from_file(tmp_path / "c.ini").seed == 3
