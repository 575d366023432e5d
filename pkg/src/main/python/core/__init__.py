# Spectral kernels and the exception hierarchy
