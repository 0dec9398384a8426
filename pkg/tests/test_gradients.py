"""Analytic gradients of the noise-prediction loss against finite differences."""

import numpy as np
import pytest
import tensorflow as tf

from guidedicm.generator import control, diffusion
from guidedicm.generator.networks import Architecture, build_noise_predictor

pytestmark = pytest.mark.slow

STEP = 1e-3
RELATIVE_TOLERANCE = 1e-2

DOUBLE_ARCH = Architecture(16, 8, (1, 2), 1, (), 4, 16, 'float64')


@pytest.fixture(scope='module')
def draws():
    rng = np.random.default_rng(11)
    schedule = diffusion.make_schedule(50, 1e-4, 0.02)
    z0 = diffusion.to_model_range(rng.uniform(size=(2, 16, 16, 3)))
    t, eps = diffusion.draw_noise(rng, z0.shape, schedule)
    return z0, t, eps, schedule


def loss_value(predict, draws):
    z0, t, eps, schedule = draws
    return float(diffusion.loss_for_draws(predict, z0, t, eps, schedule))


def analytic_gradients(predict, variables, draws):
    z0, t, eps, schedule = draws
    with tf.GradientTape() as tape:
        loss = diffusion.loss_for_draws(predict, z0, t, eps, schedule)
    return [np.asarray(gradient) for gradient in tape.gradient(loss, variables)]


def central_difference(predict, variable, index, draws):
    original = np.array(variable)
    values = []
    for sign in (1.0, -1.0):
        shifted = original.copy()
        shifted[index] += sign * STEP
        variable.assign(shifted)
        values.append(loss_value(predict, draws))
    variable.assign(original)
    return (values[0] - values[1]) / (2.0 * STEP)


def relative_error(a, b):
    return abs(a - b) / max(abs(a), abs(b))


def sampled_entries(gradients, count, rng):
    """Entries drawn at random among those with a gradient clear of rounding noise."""
    candidates = [
        (position, index)
        for position, gradient in enumerate(gradients)
        for index in zip(*np.nonzero(np.abs(gradient) > 1e-3))
    ]
    chosen = rng.choice(len(candidates), size=count, replace=False)
    return [candidates[i] for i in chosen]


def test_base_loss_gradient(draws):
    model = build_noise_predictor(DOUBLE_ARCH, seed=2)

    def predict(z_t, t):
        return model(z_t, t)

    variables = model.trainable_variables
    gradients = analytic_gradients(predict, variables, draws)
    for position, index in sampled_entries(gradients, 10, np.random.default_rng(0)):
        numeric = central_difference(predict, variables[position], index, draws)
        assert relative_error(gradients[position][index], numeric) <= RELATIVE_TOLERANCE


def test_zero_coupling_receives_gradient(draws):
    base = build_noise_predictor(DOUBLE_ARCH, seed=2)
    branch = control.init_control_branch(base, seed=4)
    condition = control.prepare_condition(
        list(np.random.default_rng(5).uniform(size=(2, 16, 16, 3))), 16
    )

    def predict(z_t, t):
        features = branch.encode_condition(condition)
        return base(z_t, t, control=branch(z_t, t, features))

    kernel = branch.mid_coupling.kernel
    (gradient,) = analytic_gradients(predict, [kernel], draws)
    assert np.max(np.abs(np.asarray(kernel))) == 0.0
    assert np.max(np.abs(gradient)) > 0.0

    index = np.unravel_index(np.argmax(np.abs(gradient)), gradient.shape)
    numeric = central_difference(predict, kernel, index, draws)
    assert relative_error(gradient[index], numeric) <= RELATIVE_TOLERANCE
