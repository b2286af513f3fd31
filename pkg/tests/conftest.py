import pytest

from copolab.kernel import FamilyKind, SlowlyVaryingFamily, build_kernel


@pytest.fixture(scope="session")
def families():
    return {
        "sub": SlowlyVaryingFamily(FamilyKind.SUB_LOGARITHMIC, upsilon=2.0, c_L=1.0),
        "log": SlowlyVaryingFamily(FamilyKind.LOGARITHMIC, upsilon=2.0, c_L=1.0),
        "super": SlowlyVaryingFamily(FamilyKind.SUPER_LOGARITHMIC, upsilon=2.0, c_L=1.0),
    }


@pytest.fixture(scope="session")
def log_kernel_small(families):
    return build_kernel(families["log"], 2000)


@pytest.fixture(scope="session")
def log_kernel_4000(families):
    return build_kernel(families["log"], 4000)


@pytest.fixture(scope="session")
def big_kernels(families):
    # large support shared by the defect scans; built once per session
    return {name: build_kernel(fam, 100_000) for name, fam in families.items()}
