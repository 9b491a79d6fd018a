import os
import sys

import numpy as np
import pytest

from chmp.classifier import write_idx


@pytest.fixture(scope="session")
def digits_idx(tmp_path_factory):
    """The small scikit-learn digits set written as IDX files.

    Pixel range 0..16 is rescaled to 0..255 so the files look like MNIST.
    ``CHMP_MNIST_DIR`` pointing at real MNIST IDX files takes precedence."""
    real = os.environ.get("CHMP_MNIST_DIR")
    if real:
        names = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                 "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")
        paths = [os.path.join(real, n) for n in names]
        if all(os.path.exists(x) for x in paths):
            return tuple(paths) + ("mnist",)
    datasets = pytest.importorskip("sklearn.datasets")
    d = datasets.load_digits()
    images = np.round(d.images * (255.0 / 16.0)).astype(np.uint8)
    labels = d.target.astype(np.uint8)
    out = tmp_path_factory.mktemp("digits")
    half = len(labels) * 3 // 4
    tri, trl = out / "train-images", out / "train-labels"
    tei, tel = out / "test-images", out / "test-labels"
    write_idx(tri, trl, images[:half], labels[:half])
    write_idx(tei, tel, images[half:], labels[half:])
    return str(tri), str(trl), str(tei), str(tel), "digits"


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
