"""
Tests Unitarios para el modelo de dipolo y el magnetómetro
Ejecutar con: python -m pytest tests/test_magnetics.py -v
O simplemente: python tests/test_magnetics.py
"""

import sys
import os
# Agregar el directorio raíz al path para importar src
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import tempfile
import unittest

import numpy as np

from src import MagnetModel, MagnetometerLayout, MagnetTrajectory, trajectory_to_field
from src.errors import ConfigError, SingularPositionError
from src.magnetics import dipole_field, load_field_csv, quantize, save_field_csv

ON_AXIS = (0.0, 0.0, -3.0)


def magnitude(b):
    return float(np.sqrt(sum(c * c for c in b)))


class TestDipoleField(unittest.TestCase):
    """Tests para el campo del dipolo puntual"""

    def setUp(self):
        """Imán N50 de 2 mm con Br=1.43 T"""
        self.magnet = MagnetModel()

    def test_moment(self):
        """Test que el momento del cubo de 2 mm es ≈ 9.10e-3 A·m²"""
        self.assertAlmostEqual(self.magnet.moment, 9.10e-3, delta=0.01e-3)

    def test_on_axis(self):
        """Test que a 3 mm bajo el centro Bz ≈ 6.74e4 µT y Bx=By=0"""
        bx, by, bz = dipole_field(self.magnet, (0.0, 0.0, 0.0), ON_AXIS)
        self.assertAlmostEqual(bz, 6.74e4, delta=0.01e4)
        expected = 2e-7 * self.magnet.moment / (3e-3) ** 3 * 1e6
        self.assertAlmostEqual(bz / expected, 1.0, places=12)
        self.assertEqual(bx, 0.0)
        self.assertEqual(by, 0.0)

    def test_equatorial_half(self):
        """Test que en el ecuador el campo es la mitad y antiparalelo al momento"""
        axial = dipole_field(self.magnet, (0.0, 0.0, 0.0), ON_AXIS)
        equatorial = dipole_field(self.magnet, (0.0, 0.0, 0.0), (3.0, 0.0, 0.0))
        self.assertAlmostEqual(magnitude(equatorial) / magnitude(axial), 0.5, places=12)
        self.assertLess(equatorial[2], 0.0)

    def test_rotation_mirror(self):
        """Test que invertir θ invierte Bx y conserva Bz en el eje de reposo"""
        plus = dipole_field(self.magnet, (0.0, 0.0, 50.0), ON_AXIS)
        minus = dipole_field(self.magnet, (0.0, 0.0, -50.0), ON_AXIS)
        self.assertNotEqual(plus[0], 0.0)
        self.assertAlmostEqual(plus[0], -minus[0], places=9)
        self.assertAlmostEqual(plus[2], minus[2], places=9)

    def test_far_field_decay(self):
        """Test que duplicar la distancia divide el campo entre 8"""
        near = dipole_field(self.magnet, (0.0, 0.0, 0.0), ON_AXIS)
        far = dipole_field(self.magnet, (0.0, 0.0, 0.0), (0.0, 0.0, -6.0))
        self.assertAlmostEqual(magnitude(far) / magnitude(near), 1.0 / 8.0, delta=1e-9 / 8)

    def test_linear_in_moment(self):
        """Test que duplicar la remanencia duplica todas las componentes"""
        strong = MagnetModel(remanence=2 * self.magnet.remanence)
        pose = (40.0, -25.0, 12.0)
        base = dipole_field(self.magnet, pose, (1.0, 0.5, -3.0))
        double = dipole_field(strong, pose, (1.0, 0.5, -3.0))
        for a, b in zip(base, double):
            self.assertAlmostEqual(b, 2 * a, delta=1e-9 * abs(a) + 1e-12)

    def test_singular_position(self):
        """Test que el sensor demasiado cerca del imán es un error"""
        with self.assertRaises(SingularPositionError):
            dipole_field(self.magnet, (0.0, -2800.0, 0.0), ON_AXIS)

    def test_layout_inside_magnet(self):
        """Test que un chip dentro del imán invalida la disposición"""
        with self.assertRaises(ConfigError):
            MagnetometerLayout(position=(0.0, 0.0, -0.5)).validate(self.magnet)


class TestQuantize(unittest.TestCase):
    """Tests para la cuantización a LSB"""

    def setUp(self):
        self.layout = MagnetometerLayout()

    def test_round_to_nearest(self):
        """Test que 0, 12.6 y 12.3 µT dan 0, 13 y 12 LSB"""
        counts = quantize([0.0, 12.6, 12.3], self.layout)
        self.assertEqual(counts.tolist(), [0, 13, 12])

    def test_saturation(self):
        """Test que las lecturas fuera de rango saturan en ±(2^17 - 1)"""
        counts = quantize([5e6, -5e6], self.layout)
        self.assertEqual(counts.tolist(), [131071, -131071])

    def test_error_bound(self):
        """Test que el error de cuantización nunca supera media conversión"""
        layout = MagnetometerLayout(conversion=0.7)
        values = np.random.default_rng(5).uniform(-5000, 5000, size=2000)
        counts = quantize(values, layout)
        self.assertLessEqual(np.max(np.abs(counts * 0.7 - values)), 0.35 + 1e-9)


class TestTrajectoryToField(unittest.TestCase):
    """Tests para la conversión de trayectorias a lecturas"""

    def setUp(self):
        self.times = np.arange(500) / 5000.0
        self.magnet = MagnetModel()
        self.layout = MagnetometerLayout()

    def trajectory(self, z):
        zeros = np.zeros_like(self.times)
        return MagnetTrajectory(self.times, zeros, z, zeros)

    def test_constant_trajectory(self):
        """Test que una pose constante da lecturas constantes"""
        field = trajectory_to_field(self.trajectory(np.full(500, -20.0)),
                                    self.magnet, self.layout)
        self.assertEqual(len(field), 500)
        self.assertEqual(np.unique(field.bz).size, 1)
        self.assertTrue(np.all(field.by == 0))
        self.assertEqual(field.provenance, 'simulated')
        self.assertAlmostEqual(field.rate, 5000.0)

    def test_z_oscillation_sensitivity(self):
        """Test que ±10 µm en z cambian Bz alrededor de ±1%"""
        z = 10.0 * np.sin(2 * np.pi * 50.0 * self.times)
        field = trajectory_to_field(self.trajectory(z), self.magnet, self.layout)
        static = dipole_field(self.magnet, (0.0, 0.0, 0.0), self.layout.position)[2]
        swing = (field.bz.max() - field.bz.min()) / 2.0 / static
        self.assertGreater(swing, 0.009)
        self.assertLess(swing, 0.011)

    def test_csv_round_trip(self):
        """Test que el CSV de campo conserva cuentas, frecuencia y metadatos"""
        z = 10.0 * np.sin(2 * np.pi * 50.0 * self.times)
        field = trajectory_to_field(self.trajectory(z), self.magnet, self.layout,
                                    meta={'run_id': 'demo'})
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'demo.field.csv')
            save_field_csv(field, path)
            loaded = load_field_csv(path)
        np.testing.assert_array_equal(loaded.bz, field.bz)
        np.testing.assert_array_equal(loaded.times, field.times)
        self.assertEqual(loaded.rate, field.rate)
        self.assertEqual(loaded.meta['run_id'], 'demo')
        self.assertEqual(loaded.provenance, 'simulated')


# TESTS EJECUTIONS

def run_tests():
    """Ejecuta todos los tests"""
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()

    suite.addTests(loader.loadTestsFromTestCase(TestDipoleField))
    suite.addTests(loader.loadTestsFromTestCase(TestQuantize))
    suite.addTests(loader.loadTestsFromTestCase(TestTrajectoryToField))

    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite)

    return result.wasSuccessful()


if __name__ == "__main__":
    success = run_tests()
    exit(0 if success else 1)
