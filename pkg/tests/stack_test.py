import pytest

from parastack import (
    GeneratorParams,
    LayerStack,
    ValidationError,
    generate_random_stack,
    microcavity,
    quarter_wave_stack,
)
from parastack.material import LINBO3, SIO2


def test_zero_jitter_length():
    for n_elem in (1, 17, 250):
        stack = generate_random_stack(GeneratorParams(n_elem=n_elem, seed=7, jitter_sigma=0))
        assert stack.optical_length() == pytest.approx(n_elem / 4, rel=1e-12)
        assert stack.provenance["resamples"] == 0


def test_deterministic():
    params = GeneratorParams(n_elem=250, seed=42)
    first = generate_random_stack(params)
    second = generate_random_stack(params)
    assert first == second
    assert first.dumps() == second.dumps()

    other = generate_random_stack(GeneratorParams(n_elem=250, seed=43))
    assert other.dumps() != first.dumps()


def test_layers():
    stack = generate_random_stack(GeneratorParams(n_elem=250, seed=1))
    assert (stack.thicknesses > 0).all()
    assert stack.boundary_count == len(stack) - 1
    for (left, _), (right, _) in zip(stack.layers, stack.layers[1:]):
        assert left != right
    assert stack.provenance["seed"] == 1
    assert stack.provenance["n_elem"] == 250
    assert stack.provenance["jitter_sigma"] == 0.025
    linbo3 = sum(thk for mat, thk in stack.layers if mat is LINBO3)
    assert stack.nonlinear_thickness == pytest.approx(linbo3, rel=1e-12)


def test_params_validation():
    with pytest.raises(ValidationError):
        GeneratorParams(n_elem=0)
    with pytest.raises(ValidationError):
        GeneratorParams(n_elem=10, seed=-1)
    with pytest.raises(ValidationError):
        GeneratorParams(n_elem=10, lambda0=0)
    with pytest.raises(ValidationError):
        # Shifts must stay below an eighth of the design wavelength
        GeneratorParams(n_elem=10, jitter_sigma=0.125)
    assert GeneratorParams(n_elem=10, lambda0=2.0).jitter_sigma == 0.05


def test_invalid_stack():
    with pytest.raises(ValidationError):
        LayerStack([(SIO2, 0.1), (SIO2, 0.2)])
    with pytest.raises(ValidationError):
        LayerStack([(SIO2, 0.1), (LINBO3, 0.0)])


def test_serialize():
    stack = generate_random_stack(GeneratorParams(n_elem=100, seed=5))
    payload = stack.dumps()
    clone = LayerStack.loads(payload)
    assert len(clone) == len(stack)
    assert clone.materials == stack.materials
    assert clone.thicknesses == pytest.approx(stack.thicknesses, rel=1e-11)
    assert clone.provenance["seed"] == 5
    # Byte stable
    assert clone.dumps() == payload
    assert clone.digest() == stack.digest()

    with pytest.raises(ValidationError):
        LayerStack.loads("{}")
    with pytest.raises(ValidationError):
        LayerStack.loads("not json")
    with pytest.raises(ValidationError):
        LayerStack.loads('{"lambda0_um": 1, "layers": [{"material": "Nope", "thickness_um": 1}]}')


def test_concat_scaled():
    mirror = quarter_wave_stack(4)
    assert len(mirror) == 8
    assert mirror.optical_length() == pytest.approx(2.0, rel=1e-12)

    cavity = microcavity(3)
    assert len(cavity) == 15
    # Quarter waves, plus a half wave defect
    assert cavity.optical_length() == pytest.approx(15 / 4 + 1 / 4, rel=1e-12)

    both = mirror.concat(cavity)
    assert len(both) == len(mirror) + len(cavity)
    assert both.optical_length() == pytest.approx(
        mirror.optical_length() + cavity.optical_length(), rel=1e-12
    )
    assert mirror.scaled(2).optical_length() == pytest.approx(4.0, rel=1e-12)
