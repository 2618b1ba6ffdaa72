import os

# keep sweeps in-process unless a test asks for workers explicitly
os.environ.setdefault("QRABI_THREADS", "1")
