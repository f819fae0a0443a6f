"""
Tests Unitarios para k-NN, validación cruzada y estadística entre grupos
Ejecutar con: python -m pytest tests/test_learn.py -v
O simplemente: python tests/test_learn.py
"""

import sys
import os
# Agregar el directorio raíz al path para importar src
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import math
import unittest
from collections import Counter

import numpy as np
from scipy import stats

from src import CvPlan, KnnConfig, LabeledDataset, evaluate, knn_predict
from src.errors import ClassTooSmallError, ConfigError, DataError
from src.learn import (
    KnnClassifier, anova_oneway, stratified_folds, studentized_range_cdf,
    studentized_range_ppf, tukey_hsd,
)


def exhaustive_knn(features, labels, query, k):
    """Oráculo: ordena todas las distancias y vota con las mismas reglas de desempate"""
    distances = [math.dist(row, query) for row in features]
    nearest = sorted(range(len(features)), key=lambda i: (distances[i], i))[:k]
    votes = Counter(labels[i] for i in nearest)
    best = max(votes.values())
    tied = sorted(label for label, count in votes.items() if count == best)

    def mean_distance(label):
        values = [distances[i] for i in nearest if labels[i] == label]
        return sum(values) / len(values)

    return min(tied, key=lambda label: (mean_distance(label), label))


def blobs(per_class=20, seed=0):
    """Dos nubes separadas en 2-D"""
    rng = np.random.default_rng(seed)
    features = np.vstack([rng.normal(0.0, 0.3, size=(per_class, 2)),
                          rng.normal(10.0, 0.3, size=(per_class, 2))])
    labels = ['A'] * per_class + ['B'] * per_class
    return LabeledDataset(features, labels)


class TestKnn(unittest.TestCase):
    """Tests para el clasificador k-NN"""

    def test_unanimous(self):
        """Test que con una sola clase siempre se predice esa clase"""
        train = LabeledDataset(np.random.default_rng(1).normal(size=(6, 3)), ['x'] * 6)
        self.assertEqual(knn_predict(train, np.array([50.0, -3.0, 2.0])), 'x')

    def test_majority(self):
        """Test que 3 votos de A ganan a 2 de B con k=5"""
        features = np.vstack([np.zeros((3, 3)), np.ones((3, 3))])
        train = LabeledDataset(features, ['A', 'A', 'A', 'B', 'B', 'B'])
        self.assertEqual(knn_predict(train, np.array([0.1, 0.1, 0.1]), KnnConfig(k=5)), 'A')

    def test_tie_prefers_closer_class(self):
        """Test que un empate de votos lo gana la clase con menor distancia media"""
        train = LabeledDataset(np.array([[2.0], [1.0]]), ['A', 'B'])
        self.assertEqual(knn_predict(train, np.array([0.0]), KnnConfig(k=2)), 'B')

    def test_tie_on_equal_distance(self):
        """Test que con distancias iguales gana la etiqueta menor"""
        train = LabeledDataset(np.array([[1.0], [-1.0]]), ['B', 'A'])
        self.assertEqual(knn_predict(train, np.array([0.0]), KnnConfig(k=2)), 'A')

    def test_matches_exhaustive_oracle(self):
        """Test que 500 puntos aleatorios coinciden con el oráculo exhaustivo"""
        rng = np.random.default_rng(42)
        features = rng.uniform(0, 1, size=(500, 4))
        labels = [f"c{i}" for i in rng.integers(0, 3, size=500)]
        queries = rng.uniform(0, 1, size=(60, 4))
        classifier = KnnClassifier(KnnConfig(k=5)).fit(features, labels)
        for query in queries:
            self.assertEqual(classifier.predict_one(query),
                             exhaustive_knn(features.tolist(), labels, query.tolist(), 5))

    def test_scale_invariance(self):
        """Test que multiplicar todas las coordenadas por c > 0 no cambia la predicción"""
        rng = np.random.default_rng(8)
        features = rng.normal(size=(80, 5))
        labels = list(rng.integers(0, 4, size=80))
        queries = rng.normal(size=(30, 5))
        base = KnnClassifier().fit(features, labels).predict(queries)
        for c in (2.0, 0.5):
            scaled = KnnClassifier().fit(features * c, labels).predict(queries * c)
            self.assertEqual(scaled, base)

    def test_dimension_mismatch(self):
        """Test que una consulta de otra dimensión es un error"""
        train = LabeledDataset(np.zeros((5, 3)), ['a'] * 5)
        with self.assertRaises(DataError):
            knn_predict(train, np.zeros(4))

    def test_k_larger_than_train(self):
        """Test que k mayor que el entrenamiento es un error de configuración"""
        train = LabeledDataset(np.zeros((3, 2)), ['a', 'b', 'a'])
        with self.assertRaises(ConfigError):
            knn_predict(train, np.zeros(2), KnnConfig(k=5))


class TestStratifiedFolds(unittest.TestCase):
    """Tests para los pliegues estratificados repetidos"""

    def test_exact_balance(self):
        """Test que 5+5 filas en 5 pliegues dan una de cada clase por pliegue"""
        labels = ['A'] * 5 + ['B'] * 5
        for fold_of in stratified_folds(labels, CvPlan(folds=5, repeats=3, seed=1)):
            for fold in range(5):
                members = [labels[i] for i in np.flatnonzero(fold_of == fold)]
                self.assertEqual(sorted(members), ['A', 'B'])

    def test_uneven_class(self):
        """Test que 6 A y 5 B dan 1 o 2 A y exactamente 1 B por pliegue"""
        labels = ['A'] * 6 + ['B'] * 5
        for fold_of in stratified_folds(labels, CvPlan(folds=5, repeats=4, seed=2)):
            for fold in range(5):
                counts = Counter(labels[i] for i in np.flatnonzero(fold_of == fold))
                self.assertIn(counts['A'], (1, 2))
                self.assertEqual(counts['B'], 1)

    def test_deterministic(self):
        """Test que la misma semilla produce las mismas asignaciones"""
        labels = list(np.random.default_rng(0).integers(0, 3, size=60))
        first = stratified_folds(labels, CvPlan(seed=11))
        second = stratified_folds(labels, CvPlan(seed=11))
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a, b)

    def test_repeats_differ(self):
        """Test que cada repetición baraja de nuevo"""
        labels = ['A'] * 20 + ['B'] * 20
        folds = stratified_folds(labels, CvPlan(folds=5, repeats=2, seed=3))
        self.assertFalse(np.array_equal(folds[0], folds[1]))

    def test_balance_within_one(self):
        """Test que cada clase se reparte con diferencia de a lo sumo 1 entre pliegues"""
        labels = ['A'] * 17 + ['B'] * 9 + ['C'] * 12
        for fold_of in stratified_folds(labels, CvPlan(folds=5, repeats=5, seed=4)):
            self.assertEqual(fold_of.size, len(labels))
            for label in ('A', 'B', 'C'):
                rows = [i for i, y in enumerate(labels) if y == label]
                sizes = np.bincount(fold_of[rows], minlength=5)
                self.assertLessEqual(sizes.max() - sizes.min(), 1)

    def test_class_too_small(self):
        """Test que una clase con menos miembros que pliegues es un error"""
        with self.assertRaises(ClassTooSmallError):
            stratified_folds(['A'] * 10 + ['B'] * 3, CvPlan(folds=5))


class TestEvaluate(unittest.TestCase):
    """Tests para la evaluación por validación cruzada"""

    def test_separable_blobs(self):
        """Test que dos nubes separadas se clasifican perfectamente"""
        result = evaluate(blobs(), CvPlan(folds=5, repeats=2, seed=0))
        self.assertEqual(result.mean, 1.0)
        self.assertEqual(result.per_class(), {'A': 1.0, 'B': 1.0})

    def test_model_counts(self):
        """Test que los planes con nombre producen 50 y 300 modelos"""
        dataset = blobs()
        power = evaluate(dataset, CvPlan.preset('power-analysis'))
        self.assertEqual(len(power), 50)
        self.assertEqual(CvPlan.preset('velocity-split').model_count, 300)
        self.assertTrue(all(0.0 <= a <= 1.0 for a in power.accuracies))

    def test_chance_level(self):
        """Test que etiquetas al azar sobre vectores idénticos rinden cerca del 50%"""
        rng = np.random.default_rng(6)
        labels = list(rng.permutation(['A'] * 20 + ['B'] * 20))
        dataset = LabeledDataset(np.zeros((40, 3)), labels)
        result = evaluate(dataset, CvPlan.preset('velocity-split', seed=6))
        self.assertEqual(len(result), 300)
        self.assertGreaterEqual(result.mean, 0.4)
        self.assertLessEqual(result.mean, 0.6)

    def test_jobs_do_not_change_results(self):
        """Test que el paralelismo no cambia las exactitudes"""
        rng = np.random.default_rng(12)
        features = rng.normal(size=(45, 4))
        labels = ['a'] * 15 + ['b'] * 15 + ['c'] * 15
        features[15:30] += 1.0
        dataset = LabeledDataset(features, labels)
        plan = CvPlan(folds=5, repeats=3, seed=5)
        serial = evaluate(dataset, plan, jobs=1)
        parallel = evaluate(dataset, plan, jobs=3)
        self.assertEqual(serial.accuracies, parallel.accuracies)
        self.assertEqual(serial.keys, parallel.keys)

    def test_normalize_modes(self):
        """Test que los tres modos de normalización son aceptados"""
        for mode in ('fold', 'global', 'none'):
            result = evaluate(blobs(), CvPlan(folds=5, repeats=1), normalize_mode=mode)
            self.assertEqual(result.mean, 1.0)
        with self.assertRaises(ConfigError):
            evaluate(blobs(), CvPlan(folds=5, repeats=1), normalize_mode='zscore')

    def test_single_class(self):
        """Test que un dataset de una sola clase es un error"""
        with self.assertRaises(DataError):
            evaluate(LabeledDataset(np.zeros((10, 2)), ['A'] * 10), CvPlan())


class TestAnova(unittest.TestCase):
    """Tests para el ANOVA de un factor"""

    def test_hand_example(self):
        """Test que [1,2,3], [2,3,4], [3,4,5] dan F=3 con df (2, 6)"""
        result = anova_oneway([[1, 2, 3], [2, 3, 4], [3, 4, 5]])
        self.assertAlmostEqual(result.f, 3.0)
        self.assertEqual((result.df_between, result.df_within), (2, 6))
        reference = stats.f_oneway([1, 2, 3], [2, 3, 4], [3, 4, 5])
        self.assertAlmostEqual(result.p, reference.pvalue, places=12)

    def test_identical_groups(self):
        """Test que grupos idénticos dan F=0 y p=1"""
        f, p, _, _ = anova_oneway([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]])
        self.assertEqual((f, p), (0.0, 1.0))

    def test_zero_within_variance(self):
        """Test que grupos constantes y distintos dan F infinito"""
        result = anova_oneway([[1.0, 1.0], [2.0, 2.0]])
        self.assertEqual(result.f, float('inf'))
        self.assertEqual(result.p, 0.0)

    def test_t_squared_identity(self):
        """Test que con dos grupos F es el cuadrado del t de varianza combinada"""
        rng = np.random.default_rng(3)
        a, b = rng.normal(0.8, 0.1, size=12), rng.normal(0.85, 0.1, size=9)
        t = stats.ttest_ind(a, b, equal_var=True).statistic
        self.assertAlmostEqual(anova_oneway([a, b]).f / t ** 2, 1.0, places=9)

    def test_affine_invariance(self):
        """Test que F no cambia al sumar una constante o escalar todos los valores"""
        rng = np.random.default_rng(5)
        groups = [rng.normal(m, 1.0, size=10) for m in (0.0, 0.4, 0.9)]
        base = anova_oneway(groups).f
        self.assertAlmostEqual(anova_oneway([g + 100 for g in groups]).f / base, 1.0, places=9)
        self.assertAlmostEqual(anova_oneway([g * 3.5 for g in groups]).f / base, 1.0, places=9)

    def test_group_too_small(self):
        """Test que un grupo de un solo valor es un error"""
        with self.assertRaises(DataError):
            anova_oneway([[1.0], [2.0, 3.0]])


class TestStudentizedRange(unittest.TestCase):
    """Tests para la distribución del rango studentizado"""

    def test_critical_value(self):
        """Test que q_crit(0.05, k=3, df=10) ≈ 3.88"""
        self.assertAlmostEqual(studentized_range_ppf(0.95, 3, 10), 3.877, delta=0.02)

    def test_matches_scipy(self):
        """Test que la cuadratura coincide con scipy.stats.studentized_range"""
        for q, k, df in ((2.0, 2, 5), (3.5, 3, 10), (4.2, 4, 57), (1.0, 5, 20)):
            expected = stats.studentized_range.cdf(q, k, df)
            self.assertAlmostEqual(studentized_range_cdf(q, k, df), expected, delta=1e-4)

    def test_bounds(self):
        """Test que la CDF vale 0 en q ≤ 0 y crece con q"""
        self.assertEqual(studentized_range_cdf(0.0, 3, 10), 0.0)
        self.assertLess(studentized_range_cdf(2.0, 3, 10), studentized_range_cdf(4.0, 3, 10))


class TestTukey(unittest.TestCase):
    """Tests para las comparaciones de Tukey HSD"""

    def test_far_groups_significant(self):
        """Test que dos grupos muy separados y compactos difieren"""
        (result,) = tukey_hsd([[0.0, 0.1, 0.2], [10.0, 10.1, 10.2]], names=['a', 'b'])
        self.assertTrue(result.significant)
        self.assertAlmostEqual(result.mean_diff, 10.0)
        self.assertEqual((result.group_a, result.group_b), ('a', 'b'))
        self.assertLess(result.p_value, 0.05)

    def test_identical_groups(self):
        """Test que grupos idénticos no difieren y q=0"""
        results = tukey_hsd([[1.0, 2.0, 3.0]] * 3)
        self.assertEqual(len(results), 3)
        for result in results:
            self.assertEqual(result.q, 0.0)
            self.assertFalse(result.significant)

    def test_affine_invariance(self):
        """Test que una transformación afín común no cambia las decisiones"""
        rng = np.random.default_rng(10)
        groups = [rng.normal(m, 0.05, size=10) for m in (0.80, 0.83, 0.95)]
        base = [r.significant for r in tukey_hsd(groups)]
        moved = [r.significant for r in tukey_hsd([g * 4.0 + 7.0 for g in groups])]
        self.assertEqual(base, moved)

    def test_invalid_alpha(self):
        """Test que alpha fuera de (0, 1) es un error"""
        with self.assertRaises(ConfigError):
            tukey_hsd([[1.0, 2.0], [3.0, 4.0]], alpha=1.5)


# TESTS EJECUTIONS

def run_tests():
    """Ejecuta todos los tests"""
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()

    suite.addTests(loader.loadTestsFromTestCase(TestKnn))
    suite.addTests(loader.loadTestsFromTestCase(TestStratifiedFolds))
    suite.addTests(loader.loadTestsFromTestCase(TestEvaluate))
    suite.addTests(loader.loadTestsFromTestCase(TestAnova))
    suite.addTests(loader.loadTestsFromTestCase(TestStudentizedRange))
    suite.addTests(loader.loadTestsFromTestCase(TestTukey))

    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite)

    return result.wasSuccessful()


if __name__ == "__main__":
    success = run_tests()
    exit(0 if success else 1)
