import numpy, pytest, scipy.integrate
from numpy.testing import assert_allclose, assert_array_equal

from pidlmi.utils import *


def run(plant, scurve, pid, **kwargs):
    kwargs.setdefault("dt", 1e-4)
    return simulate(plant, SimConfig(**kwargs), scurve, pid)


def test_rms_examples():
    assert rms([3.0, 4.0]) == pytest.approx(numpy.sqrt(12.5))
    assert rms([0.0, 0.0]) == 0.0
    assert rms(numpy.full(7, -2.5)) == 2.5
    t = numpy.arange(0.0, 1.0, 1e-4)
    assert rms(numpy.sin(2 * numpy.pi * 5 * t), dt=1e-4) == pytest.approx(1 / numpy.sqrt(2), rel=1e-9)
    with pytest.raises(SimulationError):
        rms([])


def test_config_validation():
    with pytest.raises(ConfigError, match="dt"):
        SimConfig(dt=0.0)
    with pytest.raises(ConfigError, match="force-noise-amp"):
        SimConfig(force_noise_amp=-1.0)
    assert SimConfig(controller_mode="Sampled").controller_mode is ControllerMode.SAMPLED


def test_zero_reference_is_an_equilibrium(plant, pid_star):
    spec = SCurveSpec(rho0=(0.0, 0.0, 0.0), offset=0.0)
    trace = simulate(plant, SimConfig(duration=0.5, dt=1e-4), spec, pid_star)
    assert not numpy.any(trace.as_array()[:, 1:])
    assert summarize(trace) == (0.0, 0.0, 0.0)


def test_nominal_tracking_is_exact(plant, scurve, synthesis):
    trace = run(plant, scurve, synthesis.pid)
    assert trace.t.size == 30001
    assert trace.t[-1] == pytest.approx(3.0)
    assert numpy.max(numpy.abs(trace.e)) < 1e-9
    assert trace.r[-1] == pytest.approx(2e-5, rel=1e-4)


def test_perturbed_tracking_settles(plant, scurve, synthesis):
    trace = run(plant, scurve, synthesis.pid, true_dm=0.3, true_dd=0.3)
    assert numpy.max(numpy.abs(trace.e)) < 2e-5
    assert abs(trace.e[-1]) < 1e-8
    assert numpy.max(numpy.abs(trace.u_fb)) > 0


@pytest.mark.parametrize("dm,dd", [(-0.3, -0.3), (-0.3, 0.3), (0.3, -0.3), (0.3, 0.3)])
def test_synthesized_gain_tracks_every_corner(plant, scurve, synthesis, dm, dd):
    trace = run(plant, scurve, synthesis.pid, true_dm=dm, true_dd=dd)
    assert numpy.all(numpy.isfinite(trace.e))
    assert numpy.max(numpy.abs(trace.e)) < 2e-5
    assert abs(trace.e[-1]) < 1e-8


def test_noise_raises_every_rms(plant, scurve, synthesis):
    quiet = summarize(run(plant, scurve, synthesis.pid))
    noisy = summarize(run(plant, scurve, synthesis.pid, force_noise_amp=0.05, seed=3))
    assert all(n > q for n, q in zip(noisy, quiet))


def test_feedforward_helps(plant, scurve, pid_star):
    with_ff = summarize(run(plant, scurve, pid_star, true_dm=0.3, true_dd=0.3))
    without = summarize(run(plant, scurve, pid_star, true_dm=0.3, true_dd=0.3, feedforward=False))
    assert without.rms_e > with_ff.rms_e
    assert not numpy.any(run(plant, scurve, pid_star, duration=0.1, feedforward=False).u_ff)


def test_noise_is_seeded(plant, scurve, pid_star):
    a = run(plant, scurve, pid_star, duration=0.5, force_noise_amp=0.05, seed=1)
    b = run(plant, scurve, pid_star, duration=0.5, force_noise_amp=0.05, seed=1)
    c = run(plant, scurve, pid_star, duration=0.5, force_noise_amp=0.05, seed=2)
    assert_array_equal(a.as_array(), b.as_array())
    assert not numpy.array_equal(a.w, c.w)
    assert numpy.max(numpy.abs(a.w)) <= 0.05


def test_step_halving_converges(plant, scurve, pid_star):
    coarse = run(plant, scurve, pid_star, true_dm=0.3, true_dd=-0.3, dt=1e-4)
    fine = run(plant, scurve, pid_star, true_dm=0.3, true_dd=-0.3, dt=5e-5)
    assert_allclose(fine.t[::2], coarse.t)
    assert_allclose(fine.e[::2], coarse.e, rtol=0, atol=1e-6 * numpy.max(numpy.abs(fine.e)))


def test_sampled_matches_continuous(plant, scurve, pid_star):
    common = dict(true_dm=0.3, true_dd=0.3, dt=4e-5, deriv_filter_pole=2000.0)
    continuous = summarize(run(plant, scurve, pid_star, **common))
    sampled = summarize(run(plant, scurve, pid_star, controller_mode="Sampled", **common))
    assert sampled.rms_e == pytest.approx(continuous.rms_e, rel=0.05)


def test_sampled_hold_is_piecewise_constant(plant, scurve, pid_star):
    trace = run(plant, scurve, pid_star, duration=0.1, dt=4e-5, true_dm=0.3, controller_mode="Sampled")
    held = trace.u_fb[:-1].reshape(-1, 10)
    assert_array_equal(held, held[:, :1].repeat(10, axis=1))


def test_sampled_rate_includes_the_first_jump(plant, pid_star):
    # reference starts 1e-5 above the plant
    trace = run(plant, SCurveSpec(offset=3e-5), pid_star, duration=0.01, dt=4e-5, integral0=2e-6,
                controller_mode="Sampled")
    ticks = trace.u_fb[::10]
    before = pid_star.ki * 2e-6
    assert trace.udot_fb[0] == pytest.approx((ticks[0] - before) * 2500.0, rel=1e-12, abs=1e-12)
    assert_allclose(trace.udot_fb[10::10], numpy.diff(ticks) * 2500.0, rtol=1e-9, atol=1e-12)
    assert trace.udot_fb[0] != 0.0


def test_continuous_feedback_is_pid(plant, scurve, pid_star):
    trace = run(plant, scurve, pid_star, true_dm=0.3, true_dd=0.3, duration=1.0)
    integral = scipy.integrate.cumulative_trapezoid(trace.e, trace.t, initial=0.0)
    expected = pid_star.kp * trace.e + pid_star.ki * integral + pid_star.kd * trace.edot
    assert_allclose(trace.u_fb, expected, rtol=0, atol=1e-3 * numpy.max(numpy.abs(trace.u_fb)))


@pytest.mark.parametrize("dt", [1e-4, 3e-5])
def test_sampled_step_must_divide_the_period(plant, scurve, pid_star, dt):
    with pytest.raises(SimulationError):
        run(plant, scurve, pid_star, dt=dt, controller_mode="Sampled")


def test_divergence_is_reported(plant, scurve):
    with pytest.raises(DivergenceError) as info:
        run(plant, scurve, PidGains(kp=-1e6, ki=0.0, kd=0.0), true_dm=0.3, duration=1.0)
    assert 0 < info.value.time <= 1.0


def test_summary_of_a_single_sample():
    trace = Trace(*(numpy.zeros(1) for _ in TRACE_COLUMNS))
    assert summarize(trace) == (0.0, 0.0, 0.0)


def test_filtered_derivative_of_a_ramp():
    t = numpy.arange(0.0, 1.0, 1e-4)
    derivative = filtered_derivative(3.0 * t, 1e-4, pole=100.0)
    assert derivative[-1] == pytest.approx(3.0, rel=1e-6)
    assert derivative[0] == pytest.approx(0.0, abs=1e-12)


def test_trace_csv(plant, scurve, pid_star, tmp_path):
    trace = run(plant, scurve, pid_star, duration=0.01)
    path = tmp_path / "trace.csv"
    write_trace_csv(trace, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "t,r,y,e,edot,u_ff,u_fb,udot_fb,w"
    assert len(lines) == trace.t.size + 1
    assert_array_equal(numpy.loadtxt(str(path), delimiter=",", skiprows=1), trace.as_array())
