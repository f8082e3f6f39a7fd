"""Smoke test for the helio2d Python module.

Run after `cargo build --release -p helio2d-py` (or `maturin develop`):

    python3 python/smoke_test.py
"""

import cmath
import importlib
import math
import os
import shutil
import sys
import tempfile
from pathlib import Path


def load_module():
    try:
        return importlib.import_module("helio2d")
    except ImportError:
        pass
    root = Path(__file__).resolve().parents[1]
    target = Path(os.environ.get("CARGO_TARGET_DIR", root / "target"))
    for profile in ("release", "debug"):
        lib = target / profile / "libhelio2d.so"
        if lib.exists():
            tmp = Path(tempfile.mkdtemp(prefix="helio2d-py-"))
            shutil.copy(lib, tmp / "helio2d.so")
            sys.path.insert(0, str(tmp))
            return importlib.import_module("helio2d")
    sys.exit("helio2d extension not found; build it with `cargo build --release -p helio2d-py`")


def main():
    h = load_module()

    star = h.Curve.star7()
    assert abs(star.length - 13.990085) < 1e-6, star.length
    assert star.is_simple()
    pts = star.points(64)
    assert len(pts) == 64 and abs(math.hypot(*pts[0]) - 2.2) < 1e-12

    circle = h.Curve.circle(1.0)
    angles = h.far_field_angles(16)
    a = h.far_field(circle, 1.0, 0.0, angles, nodes=128, formulation="cfie", solver="dense")
    b = h.far_field(circle, 1.0, 0.0, angles, nodes=128, formulation="green", solver="dense")
    diff = math.sqrt(sum(abs(x - y) ** 2 for x, y in zip(a, b)) / sum(abs(y) ** 2 for y in b))
    assert diff < 1e-10, diff
    assert all(isinstance(v, complex) for v in a)

    err, secs = h.point_source_benchmark(1.0, 360)
    assert err < 1e-10, err

    filtered = star.filter_resample(10, 256)
    assert filtered.n_modes == 256 and filtered.hausdorff(star) < 0.25

    config = h.Config.star_example()
    config.stages = 2
    config.directions = 2
    config.max_iters = 5
    try:
        config.angles = 1
        raise AssertionError("invalid config accepted")
    except ValueError:
        pass

    data = h.synthesize_data(star, config, delta=0.05, seed=3)
    assert len(data) == 4
    assert all(abs(level - 0.05) < 1e-14 for level in data.noise_levels())
    rec = h.invert(config, data)
    assert len(rec.iterations) == 2 and rec.failure is None
    assert rec.curve.is_simple()

    with tempfile.TemporaryDirectory() as tmp:
        data.write(os.path.join(tmp, "data"), config)
        again = h.Dataset.read(os.path.join(tmp, "data"))
        k = config.wavenumbers()[0]
        assert again.get(k, math.pi) == data.get(k, math.pi)
        rec.write(os.path.join(tmp, "run"))
        assert os.path.exists(os.path.join(tmp, "run", "final_curve.json"))
        star.save(os.path.join(tmp, "star.json"))
        assert h.Curve.load(os.path.join(tmp, "star.json")).length == star.length

    print(f"helio2d {h.__version__}: smoke test passed (point source error {err:.2e})")


if __name__ == "__main__":
    main()
