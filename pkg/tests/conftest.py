import numpy as np
import pytest

from tftb.data.cifar10 import RECORD_BYTES


@pytest.fixture(scope="session")
def cifar_dir(tmp_path_factory):
    """Standard-layout directory of six valid zero-pixel CIFAR-10 batches."""
    directory = tmp_path_factory.mktemp("cifar10")
    for name in [f"data_batch_{i}.bin" for i in range(1, 6)] + ["test_batch.bin"]:
        arr = np.full(10000 * RECORD_BYTES, 128, dtype=np.uint8)
        arr[::RECORD_BYTES] = 0  # valid label bytes
        arr.tofile(str(directory / name))
    return directory
