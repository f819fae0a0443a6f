"""
Acondicionamiento de series temporales: remuestreo, filtros, espectro,
picos y media móvil exponencial
"""
from typing import List, Sequence

import numpy as np
from scipy import signal

from .config import Config
from .csvio import write_csv
from .errors import ConfigError, DataError
from .models import PowerSpectrum, SpectralPeak, UniformSeries

MIN_SPECTRAL_LENGTH = 8


def resample(times: Sequence[float], values: Sequence[float], target_rate: float) -> UniformSeries:
    """Interpolación lineal sobre una malla uniforme en [times[0], times[-1]]"""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < 2 or times.size != values.size:
        raise DataError("Se requieren al menos 2 pares (tiempo, valor)")
    if not np.all(np.diff(times) > 0):
        raise DataError("Las marcas de tiempo no son estrictamente crecientes")
    if not target_rate > 0:
        raise ConfigError("La frecuencia objetivo debe ser positiva")

    count = int(np.floor((times[-1] - times[0]) * target_rate + 1e-9)) + 1
    grid = times[0] + np.arange(count) / target_rate
    return UniformSeries(rate=float(target_rate), values=np.interp(grid, times, values))


def _zero_phase(sos: np.ndarray, values: np.ndarray) -> np.ndarray:
    if values.size < 2:
        return values.copy()
    padlen = min(3 * (2 * len(sos) + 1), values.size - 1)
    return signal.sosfiltfilt(sos, values, padlen=padlen)


def downsample(
    series: UniformSeries,
    target_rate: float,
    order: int = Config.FILTER_ORDER,
) -> UniformSeries:
    """
    Paso bajo de fase cero a 0.45 × target_rate y luego interpolación
    lineal sobre la malla de destino.
    """
    if target_rate >= series.rate:
        raise DataError(f"La frecuencia destino {target_rate} Hz no es menor que {series.rate} Hz")
    cutoff = Config.ANTIALIAS_FRACTION * target_rate
    sos = signal.butter(order, cutoff, btype='lowpass', fs=series.rate, output='sos')
    filtered = _zero_phase(sos, series.values)

    source = np.arange(filtered.size) / series.rate
    count = int(np.floor((filtered.size - 1) / series.rate * target_rate + 1e-9)) + 1
    grid = np.arange(count) / target_rate
    return UniformSeries(rate=float(target_rate), values=np.interp(grid, source, filtered))


def highpass(
    series: UniformSeries,
    cutoff: float = Config.HIGHPASS_CUTOFF,
    order: int = Config.FILTER_ORDER,
) -> UniformSeries:
    """Paso alto de orden 4 aplicado hacia delante y hacia atrás"""
    if cutoff >= series.rate / 2:
        raise DataError(f"Corte {cutoff} Hz >= Nyquist ({series.rate / 2} Hz)")
    if not cutoff > 0:
        raise ConfigError("El corte debe ser positivo")
    sos = signal.butter(order, cutoff, btype='highpass', fs=series.rate, output='sos')
    return UniformSeries(rate=series.rate, values=_zero_phase(sos, series.values))


def power_spectrum(series: UniformSeries) -> PowerSpectrum:
    """
    Espectro de magnitud unilateral con ventana de Hann y corrección de
    amplitud: un seno de amplitud A centrado en un bin da magnitud A.
    """
    n = series.values.size
    if n < MIN_SPECTRAL_LENGTH:
        raise DataError(f"Serie demasiado corta para el espectro ({n} < {MIN_SPECTRAL_LENGTH})")

    window = signal.get_window('hann', n)
    window_sum = float(np.sum(window))
    centered = series.values - np.mean(series.values)
    magnitude = np.abs(np.fft.rfft(centered * window)) / window_sum
    if n % 2 == 0:
        magnitude[1:-1] *= 2.0
    else:
        magnitude[1:] *= 2.0
    freqs = np.fft.rfftfreq(n, d=1.0 / series.rate)
    return PowerSpectrum(freqs=freqs, power=magnitude, n=n, window_sum=window_sum)


def find_peaks(
    spec: PowerSpectrum,
    min_prominence: float = Config.PEAK_PROMINENCE,
    max_count: int = Config.MAX_PEAKS,
) -> List[SpectralPeak]:
    """
    Máximos locales con prominencia topográfica >= min_prominence,
    ordenados por magnitud descendente y truncados a max_count.
    """
    power = np.asarray(spec.power, dtype=float)
    if power.size < 3 or max_count <= 0:
        return []
    indices, properties = signal.find_peaks(power, prominence=min_prominence)
    prominences = properties['prominences']
    order = np.argsort(-power[indices], kind='stable')[:max_count]
    return [
        SpectralPeak(freq=float(spec.freqs[indices[i]]), power=float(power[indices[i]]),
                     prominence=float(prominences[i]))
        for i in order
    ]


def ema(values: Sequence[float], alpha: float = Config.EMA_ALPHA) -> np.ndarray:
    """y[0] = x[0]; y[n] = α·x[n] + (1-α)·y[n-1]"""
    if not 0 < alpha <= 1:
        raise ConfigError(f"alpha debe estar en (0, 1], recibido {alpha}")
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return values.copy()
    smoothed, _ = signal.lfilter([alpha], [1.0, alpha - 1.0], values,
                                 zi=[(1.0 - alpha) * values[0]])
    return smoothed


def save_spectrum_csv(spec: PowerSpectrum, path, comments=None):
    write_csv(path, ('freq_hz', 'power'), zip(spec.freqs.tolist(), spec.power.tolist()),
              comments)
