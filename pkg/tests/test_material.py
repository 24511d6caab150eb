import numpy as np
import pytest

from mrebench.grid import build_grid
from mrebench.material import (
    KelvinVoigt,
    MaterialError,
    ZoneSpec,
    complex_modulus,
    shear_wavenumber,
    uniform_material,
    zoned_material,
)

OMEGA = 2 * np.pi * 50


class TestKelvinVoigt:
    def test_complex_modulus(self):
        G = complex_modulus(KelvinVoigt(2500, 1, 1000), OMEGA)
        assert G.real == 2500
        assert G.imag == pytest.approx(314.159265, rel=1e-8)

    def test_static_and_elastic_limits(self):
        assert complex_modulus(KelvinVoigt(2500, 1, 1000), 0.0) == 2500
        assert complex_modulus(KelvinVoigt(2500, 0, 1000), OMEGA) == 2500

    def test_linear_in_viscosity(self):
        g = [complex_modulus(KelvinVoigt(1, eta, 1), OMEGA).imag for eta in (0.5, 1.0, 2.0)]
        assert g[1] == pytest.approx(2 * g[0]) and g[2] == pytest.approx(2 * g[1])

    @pytest.mark.parametrize("mu,eta,rho", [(0, 1, 1), (1, -1, 1), (1, 1, 0), (1, 1, -5)])
    def test_invalid_parameters(self, mu, eta, rho):
        with pytest.raises(MaterialError):
            KelvinVoigt(mu, eta, rho)

    def test_wavenumber_satisfies_dispersion(self):
        m = KelvinVoigt(2500, 1, 1000)
        k = shear_wavenumber(m, OMEGA)
        assert complex_modulus(m, OMEGA) * k**2 == pytest.approx(m.rho * OMEGA**2, rel=1e-12)
        # polar form: Re k = w sqrt(rho / |G|) cos(phi / 2)
        G = complex_modulus(m, OMEGA)
        re_k = OMEGA * np.sqrt(m.rho / abs(G)) * np.cos(0.5 * np.angle(G))
        assert 2 * np.pi / k.real == pytest.approx(2 * np.pi / re_k, rel=1e-12)
        assert 2 * np.pi / k.real == pytest.approx(0.03181, rel=1e-3)


class TestZones:
    grid = build_grid((0.1, 0.1, 0.1), (9, 9, 9))
    soft = KelvinVoigt(2096.37, 1, 1000)
    stiff = KelvinVoigt(4192.74, 1, 1000)

    def halves(self, split=0.05):
        return [ZoneSpec((0, 0, 0), (split, 0.1, 0.1), self.soft, "soft"),
                ZoneSpec((split, 0, 0), (0.1, 0.1, 0.1), self.stiff, "stiff")]

    def test_two_halves(self):
        mat = zoned_material(self.grid, self.halves())
        c = self.grid.element_centroids
        np.testing.assert_array_equal(mat.zone_id, (c[:, 0] > 0.05).astype(int))
        assert set(mat.mu) == {2096.37, 4192.74}

    def test_single_zone_equals_uniform(self):
        z = [ZoneSpec((0, 0, 0), (0.1, 0.1, 0.1), self.soft)]
        a, b = zoned_material(self.grid, z), uniform_material(self.grid, self.soft)
        np.testing.assert_array_equal(a.mu, b.mu)
        np.testing.assert_array_equal(a.zone_id, b.zone_id)

    def test_slabs_vary_along_stacking_axis_only(self):
        m = KelvinVoigt(1, 0, 1)
        zones = [ZoneSpec((0, 0, z0), (0.1, 0.1, z1), m, f"s{i}")
                 for i, (z0, z1) in enumerate([(0, 0.025), (0.025, 0.075), (0.075, 0.1)])]
        ids = zoned_material(self.grid, zones).zone_id.reshape(8, 8, 8)
        assert np.all(ids == ids[:, :1, :1])
        assert len(np.unique(ids)) == 3

    def test_overlap_names_both_zones(self):
        zones = self.halves()
        zones[0] = ZoneSpec((0, 0, 0), (0.06, 0.1, 0.1), self.soft, "soft")
        with pytest.raises(MaterialError, match="'soft' and 'stiff'"):
            zoned_material(self.grid, zones)

    def test_gap_rejected(self):
        zones = self.halves()
        zones[1] = ZoneSpec((0.06, 0, 0), (0.1, 0.1, 0.1), self.stiff, "stiff")
        with pytest.raises(MaterialError, match="tile"):
            zoned_material(self.grid, zones)

    def test_interface_nodes_flagged(self):
        mat = zoned_material(self.grid, self.halves())
        ix = self.grid.node_ijk(np.arange(self.grid.n_nodes))[0]
        zone = mat.nodal_zone()
        assert np.all(zone[ix == 4] == -1)
        assert np.all(zone[ix < 4] == 0) and np.all(zone[ix > 4] == 1)

    def test_nodal_density_is_element_average(self):
        z = [ZoneSpec((0, 0, 0), (0.05, 0.1, 0.1), KelvinVoigt(1, 0, 1000), "a"),
             ZoneSpec((0.05, 0, 0), (0.1, 0.1, 0.1), KelvinVoigt(1, 0, 2000), "b")]
        rho = zoned_material(self.grid, z).nodal_rho()
        ix = self.grid.node_ijk(np.arange(self.grid.n_nodes))[0]
        assert np.allclose(rho[ix == 4], 1500.0)
        assert np.allclose(rho[ix == 0], 1000.0)
