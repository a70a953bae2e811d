"""Acceptance gate: each criterion runs at its stated tolerance and prints one
pass/fail line (run with -s to see them).  Oracles here are independent
re-implementations, not calls back into the code under test."""

import math
import random
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

import golden_support
from golden_support import run_static, load_fixture_scripts
from handrub.dataset import SplitSpec, load_manifest, split_dataset
from handrub.baseline import (
    BaselineClassifier,
    FEATURE_DIM,
    train_baseline,
    training_gradients,
    training_loss,
)
from handrub.errors import ParseError
from handrub.eventlog import feedback_text
from handrub.evaluate import eval_report_from_scores, evaluate_classifier
from handrub.metrics import who_compliance_check
from handrub.sensors import (
    DispenseConfig,
    DistanceReading,
    evaluate_dispense_gate,
    parse_distance_line,
)
from handrub.session import FeedbackKind, SessionConfig
from handrub.simulate import simulate_sessions, spec_from_fixed_durations
from handrub.synthetic import generate_gesture_dataset
from handrub.vision import (
    BackgroundModel,
    ClassScores,
    DecisionPolicy,
    FrameSample,
    N_CLASSES,
    compute_foreground_mask,
    decide_step,
)

DATA = Path(__file__).parent / "data"


@contextmanager
def criterion(name: str, budget_s: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    elapsed = time.perf_counter() - start
    assert elapsed < budget_s, f"{name} took {elapsed:.2f}s (budget {budget_s}s)"
    print(f"ACCEPTANCE {name}: PASS ({elapsed:.2f}s)")


# ---------------------------------------------------------------------------


def test_protocol_golden_fixture():
    """Scripted classifier + scripted sensor drive a full session; the
    feedback log matches the stored fixture byte for byte across 3 runs."""
    with criterion("protocol-golden", budget_s=1.0):
        fixture = golden_support.GOLDEN_FEEDBACK.read_bytes()
        scripts = load_fixture_scripts()
        for _ in range(3):
            runner, _ = run_static(*scripts)
            assert feedback_text(runner.feedback_log).encode() == fixture


def test_redispense_property_over_randomized_sessions():
    """Over >= 1000 randomized sessions a dispense prompt precedes exactly
    each group of ``group_size`` passed steps, and prompt placement equals the
    reference interpreter's (the codified transition table)."""
    import sys

    sys.path.insert(0, str(Path(__file__).parent))
    from test_session import drive_session, fb_shape, reference_run

    with criterion("re-dispense-property", budget_s=10.0):
        rng = random.Random(2024)
        cfg = SessionConfig()  # group_size 3, first-group dispense on
        violations = 0
        for _ in range(1000):
            outcomes = [
                ("pass" if rng.random() < rng.choice([0.4, 0.7, 0.95]) else "timeout")
                for _ in range(120)
            ]
            _, feedback, _ = drive_session(cfg, outcomes)
            shapes = fb_shape(feedback)
            expect, _, _ = reference_run(cfg, outcomes)
            if shapes != expect:
                violations += 1
                continue
            # group counting over the emitted log
            marks_since_prompt = None
            for kind, arg in shapes:
                if kind == "prompt_dispense":
                    if marks_since_prompt is not None and marks_since_prompt != cfg.group_size:
                        violations += 1
                    marks_since_prompt = 0
                elif kind == "mark_passed":
                    if marks_since_prompt is None:
                        violations += 1  # mark before the first prompt
                        marks_since_prompt = 0
                    marks_since_prompt += 1
            if marks_since_prompt is not None and marks_since_prompt > cfg.group_size:
                violations += 1
        assert violations == 0


def test_timing_reproduction():
    """Fixed per-step durations reproduce the reported 27.2 s mean total."""
    with criterion("timing-reproduction", budget_s=1.0):
        import json

        durations = {
            int(k): float(v)
            for k, v in json.loads(
                (DATA / "reference_step_durations.json").read_text()
            ).items()
        }
        assert durations[2] == 3.9 and durations[5] == 3.3 and durations[8] == 5.3
        assert abs(sum(durations[s] for s in (3, 4, 6, 7)) - 14.7) <= 1e-9
        spec = spec_from_fixed_durations(durations)
        _, report = simulate_sessions(spec, n_sessions=1, seed=0)
        assert abs(report.mean_total_s - 27.2) <= 1e-9
        assert who_compliance_check(report.mean_total_s) is True


def test_who_bounds_exact():
    with criterion("who-bounds", budget_s=1.0):
        assert who_compliance_check(20.0) is True
        assert who_compliance_check(27.2) is True
        assert who_compliance_check(30.0) is True
        assert who_compliance_check(19.999) is False
        assert who_compliance_check(30.001) is False


def test_evaluation_oracle_equivalence():
    """100 random synthetic prediction sets vs brute-force loops."""
    import sys

    sys.path.insert(0, str(Path(__file__).parent))
    from test_evaluate import oracle_report

    with criterion("evaluation-oracle", budget_s=5.0):
        rng = np.random.default_rng(77)
        for _ in range(100):
            n = int(rng.integers(1, 501))
            scores = rng.random((n, N_CLASSES))
            labels = rng.integers(0, N_CLASSES, size=n)
            rep = eval_report_from_scores(scores, labels)
            acc, loss, confusion = oracle_report(scores.tolist(), labels.tolist())
            assert abs(rep.accuracy - acc) <= 1e-9
            assert abs(rep.loss - loss) <= 1e-9
            assert rep.confusion.tolist() == confusion
            # exact structural identities
            for c in range(N_CLASSES):
                assert int(rep.confusion[c].sum()) == int((labels == c).sum())
            assert rep.accuracy == float(np.trace(rep.confusion)) / n


def test_decide_step_equivalence_and_monotonicity():
    """10k random windows vs the counting oracle; tau/k monotonicity."""
    with criterion("decide-step", budget_s=5.0):
        rng = random.Random(55)
        for _ in range(10_000):
            n = rng.choice([3, 5, 8])
            k = rng.randint(1, n)
            tau = rng.uniform(0.05, 0.95)
            target = rng.randrange(N_CLASSES)
            values = [rng.random() for _ in range(n)]
            window = []
            for v in values:
                s = [rng.random() * 0.5 for _ in range(N_CLASSES)]
                s[target] = v
                window.append(ClassScores(scores=tuple(s), t_ms=0))
            policy = DecisionPolicy(tau=tau, window_n=n, k_required=k)
            passed, hits = decide_step(window, target, policy)
            expect_hits = 0
            for v in values:
                if v >= tau:
                    expect_hits += 1
            assert (passed, hits) == (expect_hits >= k, expect_hits)
            # monotonicity on this window
            if tau > 0.1:
                lower = DecisionPolicy(tau=tau - 0.05, window_n=n, k_required=k)
                passed_lo, _ = decide_step(window, target, lower)
                assert passed_lo or not passed
            if k < n:
                stricter = DecisionPolicy(tau=tau, window_n=n, k_required=k + 1)
                passed_hi, _ = decide_step(window, target, stricter)
                assert passed or not passed_hi


def test_segmentation_oracle_and_tolerance_sweep():
    """Dark patches on a luma-240 background: exact per-pixel agreement and
    16-value tolerance monotonicity."""
    with criterion("segmentation", budget_s=5.0):
        rng = random.Random(6)
        for _ in range(10):
            w, h = rng.randint(33, 56), rng.randint(33, 48)
            rgb = np.full((h, w, 3), 240, dtype=np.uint8)
            px, py = rng.randrange(0, w - 8), rng.randrange(0, h - 8)
            pw, ph = rng.randint(2, 8), rng.randint(2, 8)
            dark = rng.randrange(0, 120)
            rgb[py : py + ph, px : px + pw] = dark
            tol = rng.randrange(0, 256)
            frame = FrameSample.from_rgb(0, rgb)
            mask = compute_foreground_mask(frame, BackgroundModel(240, tol))
            # straight per-pixel oracle
            for i in range(h):
                for j in range(w):
                    r, g, b = (int(v) for v in rgb[i, j])
                    luma = math.floor(0.299 * r + 0.587 * g + 0.114 * b + 0.5)
                    assert bool(mask[i, j]) == (abs(luma - 240) > tol), (i, j)
        # tolerance monotonicity sweep
        rgb = np.full((40, 40, 3), 240, dtype=np.uint8)
        rng_np = np.random.default_rng(8)
        rgb[10:30, 10:30] = rng_np.integers(0, 240, size=(20, 20, 3), dtype=np.uint8)
        frame = FrameSample.from_rgb(0, rgb)
        prev = None
        for tol in np.linspace(0, 255, 16):
            mask = compute_foreground_mask(frame, BackgroundModel(240, float(tol)))
            if prev is not None:
                assert not (mask & ~prev).any(), "foreground grew with tolerance"
            prev = mask


def test_baseline_learnability_and_gradients(tmp_path):
    """Synthetic 9-class dataset (200 frames/class, subject-grouped split):
    >= 0.95 test accuracy; gradient check vs central differences <= 1e-4."""
    with criterion("baseline-learnability", budget_s=60.0):
        manifest_path = generate_gesture_dataset(
            tmp_path / "ds", n_subjects=5, frames_per_class=200, seed=7
        )
        manifest = load_manifest(manifest_path)
        train, _val, test = split_dataset(
            manifest, SplitSpec(fractions=(0.6, 0.2, 0.2), seed=3, group_by_subject=True)
        )
        train_subjects = {c.subject_id for c in train.clips}
        test_subjects = {c.subject_id for c in test.clips}
        assert not (train_subjects & test_subjects)

        model = train_baseline(train, epochs=300, lr=5.0, stride=1)
        report = evaluate_classifier(BaselineClassifier(model), test, stride=1)
        assert report.accuracy >= 0.95, f"test accuracy {report.accuracy}"

        # gradient check at a random point
        rng = np.random.default_rng(12)
        n = 24
        x = rng.random((n, FEATURE_DIM))
        labels = rng.integers(0, N_CLASSES, size=n)
        y = np.zeros((n, N_CLASSES))
        y[np.arange(n), labels] = 1.0
        w = rng.normal(0, 0.4, size=(N_CLASSES, FEATURE_DIM))
        b = rng.normal(0, 0.4, size=N_CLASSES)
        grad_w, grad_b = training_gradients(w, b, x, y)
        h = 1e-6
        for c, k in [(int(rng.integers(0, N_CLASSES)), int(rng.integers(0, FEATURE_DIM))) for _ in range(25)]:
            wp = w.copy(); wp[c, k] += h
            wm = w.copy(); wm[c, k] -= h
            fd = (training_loss(wp, b, x, y) - training_loss(wm, b, x, y)) / (2 * h)
            denom = max(abs(fd), abs(grad_w[c, k]), 1e-8)
            assert abs(fd - grad_w[c, k]) / denom <= 1e-4
        for c in range(N_CLASSES):
            bp = b.copy(); bp[c] += h
            bm = b.copy(); bm[c] -= h
            fd = (training_loss(w, bp, x, y) - training_loss(w, bm, x, y)) / (2 * h)
            denom = max(abs(fd), abs(grad_b[c]), 1e-8)
            assert abs(fd - grad_b[c]) / denom <= 1e-4


def test_sensor_gate_and_parser_fuzz():
    """1000 random distance streams vs the sliding-window oracle, debounce
    separation, and 1e5-line parser fuzz against the grammar oracle."""
    import sys

    sys.path.insert(0, str(Path(__file__).parent))
    from test_sensors import oracle_confirmations, oracle_parse

    with criterion("sensor-gate", budget_s=10.0):
        rng = random.Random(404)
        for case in range(1000):
            cfg = DispenseConfig(
                min_cm=5,
                max_cm=30,
                hold_ms=rng.choice([0, 100, 300, 500]),
                debounce_ms=rng.choice([0, 300, 2000]),
            )
            t = 0
            cm = rng.uniform(0, 60)
            pairs = []
            for _ in range(rng.randrange(1, 80)):
                t += rng.choice([40, 80, 100, 160])
                cm = min(max(cm + rng.uniform(-8, 8), 0.0), 90.0)
                pairs.append((t, round(cm, 1)))
            readings = [DistanceReading(t_ms=a, distance_cm=b) for a, b in pairs]
            got = evaluate_dispense_gate(readings, cfg)
            assert got == oracle_confirmations(pairs, cfg), f"case {case}"
            assert all(b - a >= cfg.debounce_ms for a, b in zip(got, got[1:]))

        alphabet = b"0123456789\r\n \t+-.abcdefghxyz\x00\xff"
        for _ in range(100_000):
            n = rng.randrange(0, 65)
            line = bytes(rng.choice(alphabet) for _ in range(n))
            expected = oracle_parse(line)
            try:
                got_value = parse_distance_line(line)
            except ParseError:
                got_value = None
            assert got_value == expected, f"line {line!r}"
