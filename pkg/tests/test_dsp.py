"""
Tests Unitarios para el acondicionamiento de señales
Ejecutar con: python -m pytest tests/test_dsp.py -v
O simplemente: python tests/test_dsp.py
"""

import sys
import os
# Agregar el directorio raíz al path para importar src
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import tempfile
import unittest

import numpy as np
from scipy import signal

from src import UniformSeries
from src.csvio import read_csv
from src.dsp import downsample, ema, find_peaks, highpass, power_spectrum, resample, save_spectrum_csv
from src.errors import ConfigError, DataError


def sine(freq, rate, duration, amplitude=1.0):
    t = np.arange(int(round(duration * rate))) / rate
    return UniformSeries(rate=rate, values=amplitude * np.sin(2 * np.pi * freq * t))


def rms(values):
    return float(np.sqrt(np.mean(np.square(values))))


class TestResample(unittest.TestCase):
    """Tests para el remuestreo lineal"""

    def test_linear_ramp(self):
        """Test que una rampa se interpola exactamente"""
        series = resample([0.0, 1.0], [0.0, 10.0], 10.0)
        self.assertEqual(len(series), 11)
        np.testing.assert_allclose(series.values, np.arange(11.0), atol=1e-12)

    def test_non_increasing_times(self):
        """Test que tiempos repetidos son un error"""
        with self.assertRaises(DataError):
            resample([0.0, 0.1, 0.1], [1.0, 2.0, 3.0], 100.0)


class TestFilters(unittest.TestCase):
    """Tests para el paso alto y el diezmado"""

    def test_highpass_removes_dc(self):
        """Test que una señal constante queda en cero"""
        series = UniformSeries(rate=330.0, values=np.full(660, 250.0))
        filtered = highpass(series)
        self.assertLess(np.max(np.abs(filtered.values)), 1e-6)

    def test_highpass_passes_100hz(self):
        """Test que un seno de 100 Hz pasa sin atenuación apreciable"""
        series = sine(100.0, 330.0, 3.0, amplitude=20.0)
        filtered = highpass(series)
        middle = slice(330, 660)
        ratio = rms(filtered.values[middle]) / rms(series.values[middle])
        self.assertAlmostEqual(ratio, 1.0, delta=0.01)

    def test_highpass_attenuates_half_hz(self):
        """Test que un seno de 0.5 Hz queda por debajo del 5%"""
        series = sine(0.5, 330.0, 20.0, amplitude=20.0)
        filtered = highpass(series)
        middle = slice(5 * 330, 15 * 330)
        self.assertLess(np.max(np.abs(filtered.values[middle])), 0.05 * 20.0)

    def test_highpass_cutoff_above_nyquist(self):
        """Test que un corte mayor que Nyquist es un error"""
        with self.assertRaises(DataError):
            highpass(UniformSeries(rate=100.0, values=np.zeros(100)), cutoff=60.0)

    def test_downsample_keeps_low_band(self):
        """Test que un seno de 20 Hz sobrevive al paso de 5000 a 330 Hz"""
        result = downsample(sine(20.0, 5000.0, 2.0), 330.0)
        self.assertEqual(result.rate, 330.0)
        self.assertAlmostEqual(rms(result.values[100:-100]), 1 / np.sqrt(2), delta=0.01)

    def test_downsample_rejects_alias(self):
        """Test que un seno de 200 Hz queda por debajo del 10% tras el antialias"""
        result = downsample(sine(200.0, 5000.0, 2.0), 330.0)
        ratio = rms(result.values[100:-100]) / (1 / np.sqrt(2))
        self.assertLess(ratio, 0.10)

    def test_downsample_needs_lower_rate(self):
        """Test que no se puede diezmar a una frecuencia mayor"""
        with self.assertRaises(DataError):
            downsample(sine(20.0, 330.0, 1.0), 5000.0)


class TestPowerSpectrum(unittest.TestCase):
    """Tests para el espectro y sus picos"""

    def test_amplitude_correction(self):
        """Test que un seno centrado en un bin da magnitud igual a su amplitud"""
        spec = power_spectrum(sine(50.0, 1000.0, 1.0, amplitude=7.0))
        index = int(np.argmax(spec.power))
        self.assertAlmostEqual(spec.freqs[index], 50.0)
        self.assertAlmostEqual(spec.power[index], 7.0, places=9)
        self.assertAlmostEqual(spec.bin_width, 1.0)

    def test_parseval(self):
        """Test que la energía del espectro coincide con la de la señal enventanada"""
        rng = np.random.default_rng(2)
        for n in (256, 257):
            values = rng.standard_normal(n)
            spec = power_spectrum(UniformSeries(rate=330.0, values=values))
            windowed = (values - values.mean()) * signal.get_window('hann', n)
            self.assertAlmostEqual(spec.energy() / np.sum(windowed ** 2), 1.0, places=9)

    def test_too_short(self):
        """Test que menos de 8 muestras es un error"""
        with self.assertRaises(DataError):
            power_spectrum(UniformSeries(rate=330.0, values=np.ones(5)))

    def test_peaks_ordered_by_magnitude(self):
        """Test que los picos salen ordenados de mayor a menor"""
        t = np.arange(1000) / 1000.0
        values = 5 * np.sin(2 * np.pi * 120 * t) + 10 * np.sin(2 * np.pi * 50 * t)
        spec = power_spectrum(UniformSeries(rate=1000.0, values=values))
        peaks = find_peaks(spec)
        self.assertEqual([round(p.freq) for p in peaks], [50, 120])
        self.assertAlmostEqual(peaks[0].power, 10.0, places=6)
        self.assertEqual(len(find_peaks(spec, max_count=1)), 1)

    def test_flat_spectrum_has_no_peaks(self):
        """Test que una señal constante no tiene picos"""
        spec = power_spectrum(UniformSeries(rate=330.0, values=np.full(330, 3.0)))
        self.assertEqual(find_peaks(spec), [])

    def test_spectrum_csv(self):
        """Test que el espectro se exporta con una fila por bin"""
        spec = power_spectrum(sine(50.0, 1000.0, 1.0))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'spectrum.csv')
            save_spectrum_csv(spec, path, {'axis': 'z'})
            table = read_csv(path)
        self.assertEqual(table.header, ['freq_hz', 'power'])
        self.assertEqual(len(table.rows), len(spec.freqs))
        self.assertEqual(table.comments['axis'], 'z')
        self.assertAlmostEqual(float(table.rows[50][0]), 50.0)


class TestEma(unittest.TestCase):
    """Tests para la media móvil exponencial"""

    def test_step_response(self):
        """Test que ante un escalón y[n] = 1 - 0.88^n"""
        values = np.r_[0.0, np.ones(20)]
        smoothed = ema(values, 0.12)
        self.assertEqual(smoothed[0], 0.0)
        self.assertAlmostEqual(smoothed[10], 1 - 0.88 ** 10, places=12)

    def test_starts_at_first_value(self):
        """Test que y[0] = x[0]"""
        self.assertAlmostEqual(ema([4.0, 4.0, 4.0])[0], 4.0, places=12)

    def test_alpha_one_is_identity(self):
        """Test que alpha=1 devuelve la entrada"""
        values = np.array([1.0, -3.0, 8.0])
        np.testing.assert_allclose(ema(values, 1.0), values)

    def test_invalid_alpha(self):
        """Test que alpha fuera de (0, 1] es un error"""
        with self.assertRaises(ConfigError):
            ema([1.0, 2.0], 0.0)


# TESTS EJECUTIONS

def run_tests():
    """Ejecuta todos los tests"""
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()

    suite.addTests(loader.loadTestsFromTestCase(TestResample))
    suite.addTests(loader.loadTestsFromTestCase(TestFilters))
    suite.addTests(loader.loadTestsFromTestCase(TestPowerSpectrum))
    suite.addTests(loader.loadTestsFromTestCase(TestEma))

    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite)

    return result.wasSuccessful()


if __name__ == "__main__":
    success = run_tests()
    exit(0 if success else 1)
