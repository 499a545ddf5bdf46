from pidlmi.utils.errors import *
from pidlmi.utils.model import *
from pidlmi.utils.lmi import *
from pidlmi.utils.sdp import *
from pidlmi.utils.analysis import *
from pidlmi.utils.sim import *
from pidlmi.utils.utils import *
