from .kernels import BACKEND_NAME
