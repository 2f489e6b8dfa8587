import json
import os
import librosa
import numpy as np
import pandas as pd
from .debug import Debug as debug
from .errors import ConfigurationError


#######################
# Maths
#######################
def power_to_db(power):
    """Convert a linear power ratio (scalar or array) to dB, no clipping."""
    db = librosa.power_to_db(np.asarray(power, dtype=float), ref=1.0, amin=1e-300, top_db=None)
    return float(db) if np.ndim(db) == 0 else db

def db_to_power(db):
    return float(librosa.db_to_power(db)) if np.ndim(db) == 0 else librosa.db_to_power(np.asarray(db, dtype=float))

def amplitude_to_db(amplitude, normalise=True):
    """Amplitude in dB, normalised to 0 dB at the maximum when asked."""
    ref = np.max if normalise else 1.0
    return librosa.amplitude_to_db(np.abs(amplitude), ref=ref, amin=1e-15, top_db=None)

def hermitian(matrix):
    return 0.5 * (matrix + matrix.conj().T)

#######################
# Random streams
#######################
# one independent stream per concern so a new mismatch does not shift the others
STREAMS = {'waveforms': 1, 'noise': 2, 'perturbation': 3, 'jitter': 4, 'scattering': 5}

def rng_stream(seed, name):
    if name not in STREAMS:
        raise ConfigurationError(f'Unknown random stream: {name}')
    return np.random.default_rng(np.random.SeedSequence([int(seed), STREAMS[name]]))

def derive_seed(master_seed, trial):
    """Seed for one Monte Carlo trial, a hash of (master_seed, trial)."""
    return int(np.random.SeedSequence([int(master_seed), int(trial)]).generate_state(1)[0])

#######################
# File management
#######################
def load_json(input):
    if not os.path.isfile(input):
        raise ConfigurationError(f'Config file {input} does not exist')
    try:
        with open(input, 'r', encoding='utf-8') as file:
            return json.load(file)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f'Error loading JSON file {input}. {str(e)}') from e

def get_output_path(out_dir=None):
    path = out_dir or os.path.join(os.getcwd(), 'cache', 'output')
    if not os.path.exists(path):
        os.makedirs(path)
    return path

def write_csv(frame, path):
    """Write a DataFrame with a fixed byte layout: UTF-8, LF, '.' decimals."""
    frame.to_csv(path, index=False, lineterminator='\n', float_format='%.10g', encoding='utf-8')
    debug.log_info(f'Wrote <{os.path.basename(path)}> ({len(frame)} rows)')
    return path

def frame_from_columns(columns):
    return pd.DataFrame(dict(columns))

#######################
# UI
#######################
def progress_bar(current, total, message='Progress', barLength=50):
    percent = float(current) * 100 / total
    arrow = '-' * int(percent/100 * barLength - 1) + '>'
    spaces = ' ' * (barLength - len(arrow))
    print(f'{message}: [{arrow}{spaces}] {percent:.2f} %', end='\r')
    if current == total:
        print('\n')

def print_ascii_art():
    print(r'''
    # +-------------------------------------+
    # |    _                                |
    # |   | |__   ___  __ _ _ __ ___        |
    # |   | '_ \ / _ \/ _` | '_ ` _ \       |
    # |   | |_) |  __/ (_| | | | | | |      |
    # |   |_.__/ \___|\__,_|_| |_| |_|craft |
    # |                                     |
    # +-------------------------------------+
    ''')

def print_end():
    print('''
    +------------------ done ------------------+
    ''')
