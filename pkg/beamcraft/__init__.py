__package__ = 'beamcraft'
