"""
Tests Unitarios para la configuración de experimentos
Ejecutar con: python -m pytest tests/test_experiment.py -v
O simplemente: python tests/test_experiment.py
"""

import sys
import os
# Agregar el directorio raíz al path para importar src
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import tempfile
import unittest
from pathlib import Path

from src.config import Config
from src.errors import ConfigError
from src.experiment import (
    SCHEMA_VERSION, SWEEP_PRESETS, ScanGrid, load_experiment, parse_experiment,
    preset_experiment,
)

EXPERIMENT_TOML = """
name = "demo"
seed = 11
out_dir = "resultados"

[scan]
velocities = [25.0, 50.0]
directions = ["+x", "-x"]
repetitions = 2

[[designs]]
name = "lisa"
tip = { kind = "flat" }

[[designs]]
name = "crestas"
tip = { kind = "flat-ridged", ridge_depth = 60.0 }

[[surfaces]]
id = "fina"
wavelength = 0.3
amplitude = 25.0

[[surfaces]]
id = "gruesa"
wavelength = 0.6
amplitude = 25.0
label = "0.6mm"

[cv]
preset = "velocity-split"
normalize = "global"

[stats]
alpha = 0.01
"""


def design_table(name, **tip):
    return {'name': name, 'tip': tip}


class TestPresets(unittest.TestCase):
    """Tests para los barridos con nombre"""

    def test_wavelength_sweep_counts(self):
        """Test que wavelength-sweep tiene 10 × 3 superficies y 540 corridas"""
        experiment = preset_experiment('wavelength-sweep', seed=1)
        self.assertEqual(len(experiment.surfaces), 30)
        self.assertEqual(len({s.label for s in experiment.surfaces}), 10)
        self.assertEqual(len(experiment.runs()), 2 * 30 * 3 * 1 * 3)

    def test_other_presets(self):
        """Test que initial-survey tiene 20 superficies y amplitude-sweep 18"""
        self.assertEqual(len(preset_experiment('initial-survey', 1).surfaces), 20)
        amplitude = preset_experiment('amplitude-sweep', 1)
        self.assertEqual(len(amplitude.surfaces), 18)
        self.assertEqual(sorted({s.label for s in amplitude.surfaces}),
                         sorted(f"{a:g}" for a in SWEEP_PRESETS['amplitude-sweep']['amplitudes']))

    def test_wavelength_sweep_values(self):
        """Test que la rejilla de longitudes de onda empieza en 0.27, 0.33, 0.36, 0.39"""
        wavelengths = SWEEP_PRESETS['wavelength-sweep']['wavelengths']
        self.assertEqual(wavelengths[:4], (0.27, 0.33, 0.36, 0.39))

    def test_unknown_preset(self):
        """Test que un preset desconocido es un error de configuración"""
        with self.assertRaises(ConfigError) as ctx:
            preset_experiment('no-existe', 1)
        self.assertEqual(ctx.exception.key_path, 'preset')

    def test_run_id_format(self):
        """Test que el identificador combina diseño, superficie, velocidad, dirección y repetición"""
        run = preset_experiment('wavelength-sweep', seed=1).runs()[0]
        self.assertEqual(run.run_id, 'flat__sin-l0.27-a10__v25__px__r1')
        self.assertEqual(run.meta()['label'], '0.27')

    def test_offsets_shared_by_designs(self):
        """Test que los diseños comparten el desfase sembrado de cada corrida"""
        runs = preset_experiment('initial-survey', seed=4).runs()
        half = len(runs) // 2
        flat, ridged = runs[:half], runs[half:]
        self.assertTrue(all(r.design.name == 'flat' for r in flat))
        for a, b in zip(flat, ridged):
            self.assertEqual(a.start_offset, b.start_offset)
        offsets = {r.start_offset for r in flat}
        self.assertGreater(len(offsets), 1)
        self.assertTrue(all(0.0 <= o < 1.0 for o in offsets))

    def test_surface_length(self):
        """Test que la superficie cubre desfase, recorrido, parche y margen"""
        experiment = preset_experiment('wavelength-sweep', seed=1)
        expected = 1.0 + 100.0 * Config.SCAN_DURATION + Config.CONTACT_WIDTH + 0.5
        self.assertAlmostEqual(experiment.surface_length(), expected)


class TestConfigHash(unittest.TestCase):
    """Tests para el hash de configuración y la procedencia"""

    def test_stable(self):
        """Test que el mismo experimento da el mismo hash"""
        a = preset_experiment('amplitude-sweep', seed=3)
        b = preset_experiment('amplitude-sweep', seed=3)
        self.assertEqual(a.config_hash, b.config_hash)
        self.assertEqual(len(a.config_hash), 12)

    def test_ignores_out_dir(self):
        """Test que el directorio de salida no cambia el hash"""
        a = preset_experiment('amplitude-sweep', 3, Path('uno'))
        b = preset_experiment('amplitude-sweep', 3, Path('dos'))
        self.assertEqual(a.config_hash, b.config_hash)

    def test_seed_changes_hash(self):
        """Test que otra semilla da otro hash"""
        a = preset_experiment('amplitude-sweep', seed=3)
        b = preset_experiment('amplitude-sweep', seed=4)
        self.assertNotEqual(a.config_hash, b.config_hash)

    def test_provenance(self):
        """Test que la procedencia lleva esquema, hash y semilla"""
        experiment = preset_experiment('initial-survey', seed=9)
        self.assertEqual(experiment.provenance(), {'output_schema': SCHEMA_VERSION,
                                                   'config_hash': experiment.config_hash,
                                                   'seed': 9})


class TestParseExperiment(unittest.TestCase):
    """Tests para la lectura de documentos de experimento"""

    def test_seed_mandatory(self):
        """Test que sin semilla el experimento se rechaza"""
        with self.assertRaises(ConfigError) as ctx:
            parse_experiment({'preset': 'initial-survey'})
        self.assertEqual(ctx.exception.key_path, 'seed')

    def test_seed_argument_overrides(self):
        """Test que la semilla pasada como argumento basta"""
        experiment = parse_experiment({'preset': 'initial-survey'}, seed=5)
        self.assertEqual(experiment.seed, 5)
        self.assertEqual(experiment.cv.seed, 5)

    def test_bool_seed_rejected(self):
        """Test que una semilla booleana no se acepta como entero"""
        with self.assertRaises(ConfigError):
            parse_experiment({'seed': True})

    def test_unknown_key(self):
        """Test que una clave desconocida se informa con su ruta"""
        with self.assertRaises(ConfigError) as ctx:
            parse_experiment({'seed': 1, 'velocidad': 3})
        self.assertEqual(ctx.exception.key_path, 'velocidad')

    def test_ridge_wider_than_patch(self):
        """Test que la ruta del error apunta a designs[1].tip.ridge_width"""
        document = {'seed': 1, 'designs': [
            design_table('flat', kind='flat'),
            design_table('ancha', kind='flat-ridged', ridge_width=5000.0,
                         ridge_wavelength=6000.0),
        ]}
        with self.assertRaises(ConfigError) as ctx:
            parse_experiment(document)
        self.assertEqual(ctx.exception.key_path, 'designs[1].tip.ridge_width')
        self.assertTrue(str(ctx.exception).startswith('designs[1].tip.ridge_width:'))

    def test_negative_ridge_depth(self):
        """Test que una profundidad negativa apunta a designs[0].tip.ridge_depth"""
        document = {'seed': 1, 'designs': [design_table('r', kind='flat-ridged',
                                                        ridge_depth=-1.0)]}
        with self.assertRaises(ConfigError) as ctx:
            parse_experiment(document)
        self.assertEqual(ctx.exception.key_path, 'designs[0].tip.ridge_depth')

    def test_unknown_design_key(self):
        """Test que una clave desconocida dentro de un diseño lleva su índice"""
        document = {'seed': 1, 'designs': [design_table('lisa', kind='flat'),
                                           {'name': 'flat', 'color': 'rojo'}]}
        with self.assertRaises(ConfigError) as ctx:
            parse_experiment(document)
        self.assertEqual(ctx.exception.key_path, 'designs[1].color')

    def test_surface_grid(self):
        """Test que surface_grid genera el producto de longitudes de onda y amplitudes"""
        experiment = parse_experiment({'seed': 2, 'surface_grid': {
            'wavelengths': [0.3, 0.6], 'amplitudes': [10.0, 20.0, 30.0],
            'label_by': 'amplitude'}})
        self.assertEqual(len(experiment.surfaces), 6)
        self.assertEqual({s.label for s in experiment.surfaces}, {'10', '20', '30'})

    def test_empty_grid(self):
        """Test que sin superficies no hay corridas pero el experimento es válido"""
        experiment = parse_experiment({'seed': 2})
        self.assertEqual(experiment.runs(), [])

    def test_invalid_scan(self):
        """Test que una dirección desconocida se rechaza"""
        with self.assertRaises(ConfigError) as ctx:
            parse_experiment({'seed': 2, 'scan': {'directions': ['+y']}})
        self.assertEqual(ctx.exception.key_path, 'scan.directions')


class TestLoadExperiment(unittest.TestCase):
    """Tests para la carga de archivos TOML"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = Path(self.tmp.name) / 'experimento.toml'
        self.path.write_text(EXPERIMENT_TOML, encoding='utf-8')

    def tearDown(self):
        self.tmp.cleanup()

    def test_load(self):
        """Test que el archivo se interpreta completo"""
        experiment = load_experiment(self.path)
        self.assertEqual(experiment.name, 'demo')
        self.assertEqual(experiment.seed, 11)
        self.assertEqual([d.name for d in experiment.designs], ['lisa', 'crestas'])
        self.assertEqual(experiment.designs[1].tip.ridge_depth, 60.0)
        self.assertEqual([s.label for s in experiment.surfaces], ['0.3', '0.6mm'])
        self.assertEqual(experiment.grid, ScanGrid(velocities=(25.0, 50.0),
                                                   directions=('+x', '-x'), repetitions=2))
        self.assertEqual(len(experiment.runs()), 2 * 2 * 2 * 2 * 2)
        self.assertEqual(experiment.cv.model_count, 300)
        self.assertEqual(experiment.normalize_mode, 'global')
        self.assertEqual(experiment.alpha, 0.01)
        self.assertEqual(experiment.out_dir, Path(self.tmp.name) / 'resultados')

    def test_overrides(self):
        """Test que semilla y salida pasadas como argumento sustituyen las del archivo"""
        experiment = load_experiment(self.path, seed=2, out_dir=Path('otra'))
        self.assertEqual(experiment.seed, 2)
        self.assertEqual(experiment.out_dir, Path('otra'))

    def test_invalid_toml(self):
        """Test que un TOML mal formado es un error de configuración"""
        self.path.write_text('seed = = 1', encoding='utf-8')
        with self.assertRaises(ConfigError):
            load_experiment(self.path)

    def test_missing_file(self):
        """Test que un archivo inexistente es un error de configuración"""
        with self.assertRaises(ConfigError):
            load_experiment(Path(self.tmp.name) / 'no.toml')


# TESTS EJECUTIONS

def run_tests():
    """Ejecuta todos los tests"""
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()

    suite.addTests(loader.loadTestsFromTestCase(TestPresets))
    suite.addTests(loader.loadTestsFromTestCase(TestConfigHash))
    suite.addTests(loader.loadTestsFromTestCase(TestParseExperiment))
    suite.addTests(loader.loadTestsFromTestCase(TestLoadExperiment))

    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite)

    return result.wasSuccessful()


if __name__ == "__main__":
    success = run_tests()
    exit(0 if success else 1)
