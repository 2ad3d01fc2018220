import pytest

from pvelab import (
    Compressibility,
    InvalidParams,
    PhysParams,
    RegimeKind,
    classify_regime,
    validate_params,
)


def test_classify_examples():
    tag = classify_regime(PhysParams(lambda_e=1, mu=1, alpha=1))
    assert tag.kind is RegimeKind.CLASSICAL_BIOT
    assert tag.compressibility is Compressibility.INCOMPRESSIBLE

    tag = classify_regime(PhysParams(lambda_e=1, mu=1, c0=1.0, delta1=0.5))
    assert tag.kind is RegimeKind.VISCO_STANDARD_CONTENT
    assert tag.compressibility is Compressibility.COMPRESSIBLE

    with pytest.warns(UserWarning):
        tag = classify_regime(
            PhysParams(lambda_e=1, mu=1, alpha=1.0, delta1=0.5, delta2=0.5))
    assert tag.kind is RegimeKind.VISCO_ADJUSTED_CONTENT
    assert tag.compressibility is Compressibility.INCOMPRESSIBLE

    tag = classify_regime(PhysParams(lambda_e=1, mu=1, lambda_star=2.0))
    assert tag.kind is RegimeKind.SECONDARY_CONSOLIDATION


def test_validate_examples():
    with pytest.warns(UserWarning, match="delta2"):
        report = validate_params(
            PhysParams(lambda_e=1, mu=1, alpha=1, c0=0.0, kappa=1,
                       delta1=0.5, delta2=0.5))
    assert report == []
    bad = validate_params(
        PhysParams(lambda_e=1, mu=1, alpha=1, delta1=0.5, delta2=0.4))
    assert any("delta2 != alpha*delta1" in v for v in bad)
    bad = validate_params(
        PhysParams(lambda_e=1, mu=1, alpha=2.0, delta1=0.5, delta2=1.0,
                   c0=1.0))
    assert bad == []  # delta2 = alpha*delta1 holds exactly
    bad = validate_params(PhysParams(lambda_e=1, mu=0))
    assert any("mu > 0" in v for v in bad)


def test_classify_invalid_combinations():
    with pytest.raises(InvalidParams):
        classify_regime(PhysParams(lambda_e=1, mu=1, delta2=0.5))
    with pytest.raises(InvalidParams):
        classify_regime(PhysParams(lambda_e=1, mu=1, delta1=0.5,
                                   lambda_star=1.0))


def test_partition_of_parameter_space(rng):
    """Every valid parameter set maps to exactly one regime tag."""
    for _ in range(200):
        d1 = float(rng.choice([0.0, rng.uniform(0.1, 2.0)]))
        d2 = 0.0
        ls = 0.0
        if d1 > 0 and rng.random() < 0.5:
            d2 = d1 * 1.3  # alpha chosen below to match
        if d1 == 0 and rng.random() < 0.3:
            ls = float(rng.uniform(0.1, 2.0))
        alpha = 1.3 if d2 > 0 else float(rng.uniform(0.2, 2.0))
        p = PhysParams(lambda_e=float(rng.uniform(0.1, 3)),
                       mu=float(rng.uniform(0.1, 3)), alpha=alpha,
                       c0=float(rng.choice([0.0, rng.uniform(0.1, 3)])),
                       kappa=float(rng.uniform(0.1, 3)),
                       delta1=d1, delta2=d2, lambda_star=ls)
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            tag = classify_regime(p)
        expected = (
            RegimeKind.SECONDARY_CONSOLIDATION if ls > 0 else
            RegimeKind.VISCO_ADJUSTED_CONTENT if d2 > 0 else
            RegimeKind.VISCO_STANDARD_CONTENT if d1 > 0 else
            RegimeKind.CLASSICAL_BIOT)
        assert tag.kind is expected


def test_incompressible_alpha_warning():
    with pytest.warns(UserWarning, match="alpha"):
        validate_params(PhysParams(lambda_e=1, mu=1, alpha=0.7))
