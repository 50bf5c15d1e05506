# -*- coding: utf-8 -*-
from apps.ssm.discretize import discretize
from apps.ssm.params import SSMParams
from apps.ssm.s6 import s6_forward
from apps.ssm.scan import ScanConfig, selective_scan, ssm_scan_chunked, ssm_scan_naive
from apps.ssm.ss2d import ss2d, ss2d_directions
