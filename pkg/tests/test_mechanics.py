"""Forward/inverse force model tests.

Hand-computed expectations use the calibrated device constants
(ratio_1=6.132, ratio_2=6.017, d_1=7.17 mm, d_2=5.98 mm).
"""

import math

import numpy as np
import pytest

from gripsense.mechanics import (CalibrationCoefficients, ContactState,
                                 GripEstimate, LeverGeometry, SensorReading,
                                 Side, ZERO_CONTACT,
                                 coefficients_from_geometry, decompose,
                                 forward_sensor, in_contact,
                                 theoretical_artifact)

GEOM_1 = LeverGeometry(lever_ratio=6.132, d=7.17e-3, side=Side.LEVER_1)
GEOM_2 = LeverGeometry(lever_ratio=6.017, d=5.98e-3, side=Side.LEVER_2)


def table_coefficients():
    return coefficients_from_geometry(GEOM_1, GEOM_2)


class TestForwardSensor:
    def test_zero_grip_zero_contact(self):
        reading = forward_sensor(0, 0, ZERO_CONTACT, ZERO_CONTACT, GEOM_1, GEOM_2)
        assert reading.f_m == 0.0
        assert reading.t_m == 0.0

    def test_equal_grips_device_constants(self):
        # hand computation: f_m = (6.132 + 6.017) * 10
        #                   t_m = 6.132*7.17e-3*10 - 6.017*5.98e-3*10
        reading = forward_sensor(10, 10, ZERO_CONTACT, ZERO_CONTACT, GEOM_1, GEOM_2)
        assert reading.f_m == pytest.approx(121.49, abs=1e-9)
        assert reading.t_m == pytest.approx(6.132 * 7.17e-3 * 10
                                            - 6.017 * 5.98e-3 * 10, rel=1e-12)
        assert reading.t_m == pytest.approx(0.0798, abs=2e-4)

    def test_symmetric_device_zero_torque(self):
        geom = LeverGeometry(lever_ratio=6.0, d=7e-3)
        reading = forward_sensor(8, 8, ZERO_CONTACT, ZERO_CONTACT, geom, geom)
        assert reading.t_m == pytest.approx(0.0, abs=1e-15)

    def test_rejects_negative_grip(self):
        with pytest.raises(ValueError):
            forward_sensor(-1, 0, ZERO_CONTACT, ZERO_CONTACT, GEOM_1, GEOM_2)

    def test_rejects_non_finite_contact(self):
        with pytest.raises(ValueError):
            ContactState(f_tactor=float("nan"))

    def test_torque_antisymmetry_on_symmetric_device(self):
        geom = LeverGeometry(lever_ratio=5.5, d=6e-3)
        fwd = forward_sensor(3, 9, ZERO_CONTACT, ZERO_CONTACT, geom, geom)
        swapped = forward_sensor(9, 3, ZERO_CONTACT, ZERO_CONTACT, geom, geom)
        assert swapped.t_m == pytest.approx(-fwd.t_m, rel=1e-12)
        assert swapped.f_m == pytest.approx(fwd.f_m, rel=1e-12)

    def test_linearity_in_grips(self):
        base = forward_sensor(2, 3, ZERO_CONTACT, ZERO_CONTACT, GEOM_1, GEOM_2)
        doubled = forward_sensor(4, 6, ZERO_CONTACT, ZERO_CONTACT, GEOM_1, GEOM_2)
        assert doubled.f_m == pytest.approx(2 * base.f_m, rel=1e-12)
        assert doubled.t_m == pytest.approx(2 * base.t_m, rel=1e-12)


class TestArtifact:
    def test_pure_x_motion_is_artifact_free(self):
        contact = ContactState(f_tactor=5, f_aperture=10, f_friction=2,
                               theta=0.0, delta_y_norm=0.0)
        assert theoretical_artifact(contact, GEOM_1) == 0.0

    def test_hand_computed_y_artifact(self):
        # 0.3*1*sin(pi/2) + 0.05*5 = 0.3 + 0.25
        contact = ContactState(f_tactor=5, f_aperture=0, f_friction=1,
                               theta=math.pi / 2, delta_y_norm=0.05)
        geom = LeverGeometry(lever_ratio=6.0, d=7e-3, aperture_arm_ratio=0.3)
        assert theoretical_artifact(contact, geom) == pytest.approx(0.55, abs=1e-12)

    def test_zero_forces_zero_artifact(self):
        for theta in (0.0, 0.7, math.pi / 2):
            contact = ContactState(f_tactor=0, f_aperture=0, f_friction=0,
                                   theta=theta, delta_y_norm=0.1)
            assert theoretical_artifact(contact, GEOM_1) == 0.0

    def test_artifact_overestimates_grip(self):
        # zero friction, positive dy and tactor force: decomposed grip
        # exceeds the true grip on that lever
        contact = ContactState(f_tactor=3.0, f_aperture=12.0, f_friction=0.0,
                               theta=0.0, delta_y_norm=0.05)
        reading = forward_sensor(15, 0, contact, ZERO_CONTACT, GEOM_1, GEOM_2)
        est = decompose(reading, table_coefficients())
        assert est.f_grip_1 > 15.0


class TestCoefficients:
    def test_table_alpha(self):
        coeffs = table_coefficients()
        assert coeffs.alpha_1 == pytest.approx(0.074, abs=1e-3)
        assert coeffs.alpha_2 == pytest.approx(0.091, abs=1e-3)

    def test_table_beta_per_meter(self):
        # the device table lists 12.39 and 12.63 (unit typo: values are 1/m)
        coeffs = table_coefficients()
        assert coeffs.beta_1 == pytest.approx(12.40, abs=0.05)
        assert coeffs.beta_2 == pytest.approx(12.63, abs=0.05)

    def test_symmetric_levers(self):
        geom = LeverGeometry(lever_ratio=6.0, d=7e-3)
        coeffs = coefficients_from_geometry(geom, geom)
        assert coeffs.alpha_1 == pytest.approx(1 / (2 * 6.0), rel=1e-12)
        assert coeffs.alpha_1 == coeffs.alpha_2
        assert coeffs.beta_1 == coeffs.beta_2

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            CalibrationCoefficients(alpha_1=0.07, alpha_2=0.09, beta_1=12.4,
                                    beta_2=-12.6, d_1=7e-3, d_2=6e-3,
                                    ratio_1=6.1, ratio_2=6.0)

    def test_roundtrip_dict(self):
        coeffs = table_coefficients()
        assert CalibrationCoefficients.from_dict(coeffs.to_dict()) == coeffs


class TestDecompose:
    def test_zero_reading(self):
        est = decompose(SensorReading(0, 0), table_coefficients())
        assert (est.f_grip_1, est.f_grip_2, est.f_mean) == (0, 0, 0)

    def test_inverse_of_forward_example(self):
        est = decompose(SensorReading(121.49, 0.0798478), table_coefficients())
        assert est.f_grip_1 == pytest.approx(10.0, abs=1e-4)
        assert est.f_grip_2 == pytest.approx(10.0, abs=1e-4)

    def test_round_trip_grid(self):
        # inverse property over [0, 20]^2 N with asymmetric geometry
        coeffs = table_coefficients()
        grid = np.linspace(0, 20, 21)
        for g1 in grid:
            for g2 in grid:
                reading = forward_sensor(g1, g2, ZERO_CONTACT, ZERO_CONTACT,
                                         GEOM_1, GEOM_2)
                est = decompose(reading, coeffs)
                assert abs(est.f_grip_1 - g1) <= 1e-9 * max(1.0, g1)
                assert abs(est.f_grip_2 - g2) <= 1e-9 * max(1.0, g2)

    def test_round_trip_other_asymmetric_geometry(self):
        geom_a = LeverGeometry(lever_ratio=5.1, d=8.5e-3)
        geom_b = LeverGeometry(lever_ratio=7.3, d=4.2e-3)
        coeffs = coefficients_from_geometry(geom_a, geom_b)
        rng = np.random.default_rng(11)
        for g1, g2 in rng.uniform(0, 20, size=(50, 2)):
            reading = forward_sensor(g1, g2, ZERO_CONTACT, ZERO_CONTACT,
                                     geom_a, geom_b)
            est = decompose(reading, coeffs)
            assert est.f_grip_1 == pytest.approx(g1, rel=1e-9, abs=1e-9)
            assert est.f_grip_2 == pytest.approx(g2, rel=1e-9, abs=1e-9)

    def test_linearity_in_reading(self):
        coeffs = table_coefficients()
        a = decompose(SensorReading(10.0, 0.02), coeffs)
        b = decompose(SensorReading(30.0, 0.06), coeffs)
        assert b.f_grip_1 == pytest.approx(3 * a.f_grip_1, rel=1e-12)
        assert b.f_grip_2 == pytest.approx(3 * a.f_grip_2, rel=1e-12)

    def test_mean_identity(self):
        rng = np.random.default_rng(3)
        coeffs = table_coefficients()
        for f_m, t_m in rng.normal(0, 10, size=(20, 2)):
            est = decompose(SensorReading(float(f_m), float(t_m) / 100), coeffs)
            assert est.f_mean == (est.f_grip_1 + est.f_grip_2) / 2.0

    def test_negative_outputs_not_clamped(self):
        est = decompose(SensorReading(-0.5, 0.0), table_coefficients())
        assert est.f_grip_1 < 0
        assert not in_contact(est)

    def test_in_contact_threshold(self):
        assert in_contact(GripEstimate.from_sides(0.5, 0.5))
        assert not in_contact(GripEstimate.from_sides(0.1, 0.1))


class TestGeometryValidation:
    def test_rejects_non_positive_dimensions(self):
        with pytest.raises(ValueError):
            LeverGeometry(lever_ratio=0.0, d=7e-3)
        with pytest.raises(ValueError):
            LeverGeometry(lever_ratio=6.0, d=-1e-3)

    def test_rejects_zero_d_sum(self):
        # d must be > 0 per geometry validation, which protects the
        # d_1 + d_2 = 0 division upstream
        with pytest.raises(ValueError):
            LeverGeometry(lever_ratio=6.0, d=0.0)
