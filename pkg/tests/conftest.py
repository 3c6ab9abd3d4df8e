import os
import sys

# Quiet progress bars before marle_utils reads the environment
os.environ.setdefault('MARLE_PROGRESS', '0')

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))
sys.path.insert(0, os.path.dirname(__file__))
